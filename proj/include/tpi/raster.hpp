#pragma once

#include "tpi/font.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace tpi::raster {

// Antialiased coverage bitmap for one glyph at one size. Placement:
// pixel (pen_x + left + x, baseline_y + top + y) gets coverage[y*width + x].
struct GlyphBitmap {
    int left = 0;
    int top = 0;
    int width = 0;
    int height = 0;
    std::vector<uint8_t> coverage;
};

// Rasterizes and caches glyphs of one face at one pixel size.
// Rasterization is pure per (face, size, glyph), so cache population order
// (and therefore worker count) cannot change output bytes.
class GlyphRaster {
public:
    GlyphRaster(const font::Face& face, int size_px);

    const font::Face& face() const { return *face_; }
    int size_px() const { return size_px_; }

    const GlyphBitmap& bitmap(uint16_t glyph_id);

private:
    GlyphBitmap rasterize(uint16_t glyph_id) const;

    const font::Face* face_;
    int size_px_;
    std::unordered_map<uint16_t, GlyphBitmap> cache_;
};

// Scanline coverage accumulator over a w x h grid (y down). Outlines must
// lie inside [0,w] x [0,h]; closed contours yield exact area coverage with
// antialiased edges.
class Coverage {
public:
    Coverage(int width, int height);

    void line(float x0, float y0, float x1, float y1);
    void quad(float x0, float y0, float cx, float cy, float x1, float y1);

    // Per-row running sum of the accumulated deltas, |.| clamped to [0,1],
    // scaled to 0..255.
    std::vector<uint8_t> finish() const;

    int width() const { return width_; }
    int height() const { return height_; }

private:
    int width_;
    int height_;
    int stride_;
    std::vector<float> acc_;
};

} // namespace tpi::raster
