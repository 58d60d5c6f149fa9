#pragma once

#include <stdexcept>
#include <string>

namespace tpi {

// Exit-code taxonomy used by the CLI: config=2, input=3, transport=4, partial=5.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TransportError : std::runtime_error {
    explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or unusable content in an otherwise successful response.
struct ContentError : std::runtime_error {
    explicit ContentError(const std::string& msg) : std::runtime_error(msg) {}
};

// One augmentation iteration produced an unusable candidate; callers count and continue.
struct IterationFailed : std::runtime_error {
    explicit IterationFailed(const std::string& msg) : std::runtime_error(msg) {}
};

struct FontError : std::runtime_error {
    explicit FontError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tpi
