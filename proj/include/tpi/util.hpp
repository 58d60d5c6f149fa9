#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace tpi::util {

// --- UTF-8 ---

// Decodes UTF-8 into codepoints. Invalid sequences become U+FFFD (one per bad byte run).
std::vector<uint32_t> utf8_decode(std::string_view text);

// Encodes a codepoint sequence back to UTF-8.
std::string utf8_encode(const std::vector<uint32_t>& codepoints);
void utf8_append(std::string& out, uint32_t cp);

// Unicode White_Space property (the full list, not just ASCII).
bool is_unicode_space(uint32_t cp);

// --- misc ---

std::string base64_encode(const uint8_t* data, size_t len);

// FNV-1a 64-bit, used for config/prompt fingerprints in run metadata.
uint64_t fnv1a64(std::string_view bytes);
std::string hex64(uint64_t v);

std::string read_file_text(const std::filesystem::path& path);
std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const void* data, size_t len);

std::string lowercase_ascii(std::string_view s);
std::string trim(std::string_view s);

// --- deterministic RNG helpers ---
// std::uniform_int_distribution is implementation-defined; these are not.

// Uniform draw in [0, n) via rejection sampling on mt19937_64 output.
uint64_t bounded_rand(std::mt19937_64& rng, uint64_t n);

// k distinct indices drawn uniformly from [0, n), in draw order (partial Fisher-Yates).
std::vector<size_t> sample_distinct(std::mt19937_64& rng, size_t n, size_t k);

// Seeded lorem-style text of n_words words (sentence casing and periods included).
std::string lorem_text(std::mt19937_64& rng, size_t n_words);

// --- parallelism ---

// Runs fn(i) for i in [0, n) on `workers` threads. Exceptions propagate
// (first one wins). Callers write results into per-index slots for
// deterministic gathering.
void parallel_for(size_t n, unsigned workers, const std::function<void(size_t)>& fn);

// --- assets ---

// Resolution order: TPI_ASSETS_DIR env var, ./assets, ../assets relative to cwd.
std::filesystem::path find_assets_dir();

} // namespace tpi::util
