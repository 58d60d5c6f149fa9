#pragma once

#include "tpi/augment.hpp"
#include "tpi/layout.hpp"
#include "tpi/llm_client.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace tpi::config {

// Minimal TOML subset: [section] tables, key = value with strings,
// integers, floats, booleans and flat arrays, # comments. Enough for the
// pipeline config; nested tables and dates are rejected loudly.
struct TomlValue {
    std::variant<std::string, int64_t, double, bool, std::vector<TomlValue>> v;

    bool is_string() const { return std::holds_alternative<std::string>(v); }
    bool is_int() const { return std::holds_alternative<int64_t>(v); }
    bool is_float() const { return std::holds_alternative<double>(v); }
    bool is_bool() const { return std::holds_alternative<bool>(v); }
    bool is_array() const { return std::holds_alternative<std::vector<TomlValue>>(v); }

    const std::string& as_string() const;
    int64_t as_int() const;
    double as_number() const; // int or float
    bool as_bool() const;
    const std::vector<TomlValue>& as_array() const;
};

using TomlTable = std::map<std::string, TomlValue>;
using TomlDocument = std::map<std::string, TomlTable>; // "" holds top-level keys

TomlDocument parse_toml(const std::string& text, const std::string& origin = "<config>");
TomlDocument parse_toml_file(const std::filesystem::path& path);

struct AugmentConfig {
    uint64_t iterations = 10000;
    double threshold = 0.70;
    uint64_t rng_seed = 0;
    augment::DedupMode mode = augment::DedupMode::Online;
};

struct PathsConfig {
    std::string input;
    std::string out_dir;
    std::string manifest = "manifest.jsonl";
};

struct PipelineConfig {
    render::LayoutParams layout;
    llm::EndpointConfig endpoint;
    AugmentConfig augment;
    PathsConfig paths;

    // Fingerprint of the effective configuration, recorded in run metadata.
    std::string hash() const;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig pipeline_config_from_toml(const TomlDocument& doc);

} // namespace tpi::config
