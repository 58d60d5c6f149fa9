#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace tpi::font {

struct GlyphMetrics {
    uint16_t glyph_id = 0;
    int advance_units = 0;
    int lsb_units = 0;
    // Outline bounding box in font units (y up). All zero for empty glyphs.
    int xmin = 0, ymin = 0, xmax = 0, ymax = 0;
    bool empty = true;
};

struct OutlinePoint {
    float x = 0.f, y = 0.f; // font units, y up
    bool on_curve = true;
};

// Closed contours of on/off-curve points (TrueType quadratic convention).
struct GlyphOutline {
    std::vector<std::vector<OutlinePoint>> contours;
};

// Minimal TrueType face: cmap (formats 4 and 12), glyf/loca outlines
// including translated/scaled composites, hmtx advances, hhea metrics.
// No hinting, no kerning: layout is plain advance stepping, which keeps
// measurements integer and platform-independent.
class Face {
public:
    static Face load_file(const std::filesystem::path& path);
    static Face load_memory(std::vector<uint8_t> data, std::string name = "<memory>");

    // Resolves a bundled face identifier ("DejaVu Sans") under assets_dir.
    static Face load_bundled(const std::string& face_id,
                             const std::filesystem::path& assets_dir);

    const std::string& name() const { return name_; }
    int units_per_em() const { return units_per_em_; }
    int ascender_units() const { return ascender_; }
    int descender_units() const { return descender_; } // negative
    int line_gap_units() const { return line_gap_; }
    uint16_t glyph_count() const { return num_glyphs_; }

    // 0 (.notdef) when the codepoint is not mapped.
    uint16_t glyph_index(uint32_t codepoint) const;

    GlyphMetrics metrics(uint16_t glyph_id) const;

    // Fully resolved outline (composites flattened), font units, y up.
    GlyphOutline outline(uint16_t glyph_id) const;

    // Integer pixel advance at a pixel-per-em size: round(units * size / upem).
    int advance_px(uint16_t glyph_id, int size_px) const;

    // Conservative pixel bbox of the outline at a size (floor min, ceil max).
    // Returned as {xmin, ymin, xmax, ymax} in y-up pixel space.
    struct PixelBox {
        int xmin = 0, ymin = 0, xmax = 0, ymax = 0;
        bool empty = true;
    };
    PixelBox pixel_box(uint16_t glyph_id, int size_px) const;

    int ascent_px(int size_px) const;   // ceil(ascender * size / upem)
    int descent_px(int size_px) const;  // ceil(-descender * size / upem), positive
    int line_gap_px(int size_px) const;
    int line_height_px(int size_px) const; // ascent + descent + gap

private:
    Face() = default;
    void parse();
    const uint8_t* table(uint32_t tag, size_t* length = nullptr) const;
    void append_outline(uint16_t glyph_id, GlyphOutline& out, float a, float b, float c,
                        float d, float e, float f, int depth) const;

    std::vector<uint8_t> data_;
    std::string name_;
    struct TableEntry {
        uint32_t tag;
        uint32_t offset;
        uint32_t length;
    };
    std::vector<TableEntry> tables_;
    int units_per_em_ = 0;
    int ascender_ = 0;
    int descender_ = 0;
    int line_gap_ = 0;
    uint16_t num_glyphs_ = 0;
    uint16_t num_hmetrics_ = 0;
    bool long_loca_ = false;
    size_t cmap_sub_offset_ = 0; // absolute offset of the chosen cmap subtable
    uint16_t cmap_format_ = 0;
    size_t loca_offset_ = 0, loca_length_ = 0;
    size_t glyf_offset_ = 0, glyf_length_ = 0;
    size_t hmtx_offset_ = 0, hmtx_length_ = 0;
};

} // namespace tpi::font
