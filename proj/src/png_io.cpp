#include "tpi/png_io.hpp"
#include "tpi/errors.hpp"
#include "tpi/util.hpp"

#include <cstring>
#include <zlib.h>

namespace tpi::png {

namespace {

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_chunk(std::vector<uint8_t>& out, const char type[4], const uint8_t* data, size_t len) {
    put_be32(out, static_cast<uint32_t>(len));
    const size_t type_at = out.size();
    out.insert(out.end(), type, type + 4);
    if (len) out.insert(out.end(), data, data + len);
    uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, out.data() + type_at, static_cast<uInt>(4 + len));
    put_be32(out, crc);
}

std::vector<uint8_t> deflate_all(const uint8_t* data, size_t len) {
    z_stream zs{};
    // Level 3 keeps mostly-background canvases small without throttling
    // batch throughput; the setting is fixed so output bytes are stable.
    if (deflateInit(&zs, 3) != Z_OK) throw InputError("deflateInit failed");
    std::vector<uint8_t> out(deflateBound(&zs, static_cast<uLong>(len)));
    zs.next_in = const_cast<Bytef*>(data);
    zs.avail_in = static_cast<uInt>(len);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw InputError("deflate failed");
    out.resize(out.size() - zs.avail_out);
    return out;
}

} // namespace

std::vector<uint8_t> encode_rgb(const uint8_t* pixels, int width, int height) {
    if (width <= 0 || height <= 0) throw InputError("encode_rgb: empty image");
    const size_t row_bytes = static_cast<size_t>(width) * 3;

    // Filter type 0 (None) per scanline.
    std::vector<uint8_t> raw((row_bytes + 1) * static_cast<size_t>(height));
    for (int y = 0; y < height; ++y) {
        uint8_t* dst = raw.data() + static_cast<size_t>(y) * (row_bytes + 1);
        *dst = 0;
        std::memcpy(dst + 1, pixels + static_cast<size_t>(y) * row_bytes, row_bytes);
    }
    const auto idat = deflate_all(raw.data(), raw.size());

    std::vector<uint8_t> out;
    out.reserve(idat.size() + 128);
    static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    out.insert(out.end(), sig, sig + 8);

    uint8_t ihdr[13];
    ihdr[0] = static_cast<uint8_t>(width >> 24);
    ihdr[1] = static_cast<uint8_t>(width >> 16);
    ihdr[2] = static_cast<uint8_t>(width >> 8);
    ihdr[3] = static_cast<uint8_t>(width);
    ihdr[4] = static_cast<uint8_t>(height >> 24);
    ihdr[5] = static_cast<uint8_t>(height >> 16);
    ihdr[6] = static_cast<uint8_t>(height >> 8);
    ihdr[7] = static_cast<uint8_t>(height);
    ihdr[8] = 8;  // bit depth
    ihdr[9] = 2;  // color type: truecolor
    ihdr[10] = 0; // compression
    ihdr[11] = 0; // filter method
    ihdr[12] = 0; // no interlace
    put_chunk(out, "IHDR", ihdr, sizeof ihdr);
    put_chunk(out, "IDAT", idat.data(), idat.size());
    put_chunk(out, "IEND", nullptr, 0);
    return out;
}

void write_rgb(const std::filesystem::path& path, const uint8_t* pixels, int width, int height) {
    const auto bytes = encode_rgb(pixels, width, height);
    util::write_file_bytes(path, bytes.data(), bytes.size());
}

} // namespace tpi::png
