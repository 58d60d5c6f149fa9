#pragma once

#include "tpi/font.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tpi::render {

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

// Named colors accepted by the CLI (the ablation palette) plus "r,g,b".
Rgb parse_color(const std::string& spec);

struct LayoutParams {
    int canvas_width_px = 336;
    int canvas_height_px = 336;
    int padding_px = 8;
    int default_font_size_pt = 32;
    int min_font_size_pt = 4;
    int font_size_step_pt = 1;
    int line_spacing_px = 4;
    Rgb background_color{255, 255, 255};
    Rgb text_color{0, 0, 0};
    std::string font_face = "DejaVu Sans";

    void validate() const; // throws ConfigError on violated invariants

    int avail_width() const { return canvas_width_px - 2 * padding_px; }
    int avail_height() const { return canvas_height_px - 2 * padding_px; }
};

// Integer advance per codepoint; the only measurement wrapping depends on.
// Tests substitute stub metrics, production uses FaceMeasurer.
class TextMeasurer {
public:
    virtual ~TextMeasurer() = default;
    virtual int advance_px(uint32_t cp) const = 0;
};

class FaceMeasurer : public TextMeasurer {
public:
    FaceMeasurer(const font::Face& face, int size_px);
    int advance_px(uint32_t cp) const override;

private:
    const font::Face* face_;
    int size_px_;
    mutable std::unordered_map<uint32_t, int> cache_;
};

// Words are maximal runs of non-whitespace codepoints; any Unicode
// whitespace run separates words (leading/trailing trimmed by construction).
std::vector<std::vector<uint32_t>> split_words(std::string_view text);

// The input text with whitespace runs collapsed to single spaces.
std::string normalize_whitespace(std::string_view text);

// Greedy left-to-right packing of words. A word whose advance exceeds
// max_width_px is broken at the largest codepoint prefix that fits,
// repeatedly; the final fragment stays open so following words can join it.
// No line's advance exceeds max_width_px (except a single forced codepoint
// wider than the line). Empty text gives zero lines.
std::vector<std::string> wrap_text(std::string_view text, const TextMeasurer& measurer,
                                   int max_width_px);

// Spec-facing overload measuring with the real face at a size.
std::vector<std::string> wrap_text(std::string_view text, int font_size_pt, int max_width_px,
                                   const font::Face& face);

struct LineLayout {
    std::vector<uint32_t> codepoints;
    int advance_px = 0;   // pen travel over the whole line
    int ink_left = 0;     // conservative ink extent relative to pen origin
    int ink_right = 0;
    int ink_top = 0;      // y-down, relative to the baseline (usually negative)
    int ink_bottom = 0;
    int pen_shift = 0;    // right shift keeping negative left bearings inside the region
    int missing_glyphs = 0;
    bool has_ink = false;

    std::string text() const;
};

struct PixelBBox {
    // Half-open pixel rectangle [x0,x1) x [y0,y1); x0==x1 means empty.
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool empty() const { return x0 >= x1 || y0 >= y1; }
};

struct LayoutResult {
    int chosen_font_size_pt = 0;
    std::vector<LineLayout> lines;
    bool truncated = false;
    bool char_broken = false; // at least one intra-word break happened
    PixelBBox text_bbox;      // conservative ink bounds, clamped to the padded region
    int ascent_px = 0;
    int line_height_px = 0;
    int missing_glyphs = 0;

    std::vector<std::string> line_texts() const;
};

// Width and height check for one candidate size; the same predicate the
// fitter uses, exposed for maximality tests.
bool layout_fits(std::string_view text, int font_size_pt, const LayoutParams& params,
                 const font::Face& face);

// Top-down search over font sizes: largest size in
// {default, default-step, ..., min} whose wrapped text fits the padded
// canvas both in width (per-line ink extent) and total height
// (n*line_height + (n-1)*spacing). When even the minimum size overflows
// vertically, whole leading lines are kept, the rest dropped, and the
// truncation marker U+2026 appended to the last kept line.
LayoutResult fit_layout(std::string_view text, const LayoutParams& params,
                        const font::Face& face);

inline constexpr uint32_t kTruncationMarker = 0x2026; // HORIZONTAL ELLIPSIS

} // namespace tpi::render
