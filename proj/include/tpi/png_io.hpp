#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace tpi::png {

// Encodes 8-bit RGB (row-major, 3 bytes per pixel, no alpha) into a PNG
// byte stream. Deterministic: fixed filter (None) and fixed zlib settings.
std::vector<uint8_t> encode_rgb(const uint8_t* pixels, int width, int height);

void write_rgb(const std::filesystem::path& path, const uint8_t* pixels, int width, int height);

} // namespace tpi::png
