#include "tpi/layout.hpp"
#include "tpi/errors.hpp"
#include "tpi/util.hpp"

#include <algorithm>
#include <climits>

namespace tpi::render {

Rgb parse_color(const std::string& spec) {
    // The Appendix D.2 palette by name, otherwise "r,g,b".
    static const std::unordered_map<std::string, Rgb> named = {
        {"black", {0, 0, 0}},      {"white", {255, 255, 255}}, {"blue", {0, 0, 255}},
        {"green", {0, 128, 0}},    {"orange", {255, 165, 0}},  {"red", {255, 0, 0}},
        {"yellow", {255, 255, 0}},
    };
    const std::string key = util::lowercase_ascii(util::trim(spec));
    if (auto it = named.find(key); it != named.end()) return it->second;
    int vals[3];
    size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        size_t comma = key.find(',', pos);
        const std::string cell =
            util::trim(key.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        try {
            vals[i] = std::stoi(cell);
        } catch (const std::exception&) {
            throw ConfigError("bad color \"" + spec + "\": expected a name or r,g,b");
        }
        if (vals[i] < 0 || vals[i] > 255)
            throw ConfigError("bad color \"" + spec + "\": channel out of [0,255]");
        if (i < 2) {
            if (comma == std::string::npos)
                throw ConfigError("bad color \"" + spec + "\": expected three channels");
            pos = comma + 1;
        } else if (comma != std::string::npos) {
            throw ConfigError("bad color \"" + spec + "\": expected three channels");
        }
    }
    return {static_cast<uint8_t>(vals[0]), static_cast<uint8_t>(vals[1]),
            static_cast<uint8_t>(vals[2])};
}

void LayoutParams::validate() const {
    if (canvas_width_px <= 0 || canvas_height_px <= 0)
        throw ConfigError("canvas dimensions must be positive");
    if (padding_px < 0) throw ConfigError("padding must be nonnegative");
    if (padding_px * 2 >= canvas_width_px || padding_px * 2 >= canvas_height_px)
        throw ConfigError("padding*2 must be smaller than the canvas");
    if (default_font_size_pt <= 0 || min_font_size_pt <= 0 || font_size_step_pt <= 0)
        throw ConfigError("font sizes and step must be positive");
    if (min_font_size_pt > default_font_size_pt)
        throw ConfigError("min_font_size must not exceed default_font_size");
    if (line_spacing_px < 0) throw ConfigError("line_spacing must be nonnegative");
    if (font_face.empty()) throw ConfigError("font_face must be set");
}

FaceMeasurer::FaceMeasurer(const font::Face& face, int size_px)
    : face_(&face), size_px_(size_px) {}

int FaceMeasurer::advance_px(uint32_t cp) const {
    if (auto it = cache_.find(cp); it != cache_.end()) return it->second;
    const uint16_t gid = face_->glyph_index(cp);
    const int adv = face_->advance_px(gid, size_px_);
    cache_.emplace(cp, adv);
    return adv;
}

std::vector<std::vector<uint32_t>> split_words(std::string_view text) {
    std::vector<std::vector<uint32_t>> words;
    std::vector<uint32_t> cur;
    for (uint32_t cp : util::utf8_decode(text)) {
        if (util::is_unicode_space(cp)) {
            if (!cur.empty()) {
                words.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.push_back(cp);
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    bool first = true;
    for (const auto& word : split_words(text)) {
        if (!first) out.push_back(' ');
        first = false;
        for (uint32_t cp : word) util::utf8_append(out, cp);
    }
    return out;
}

namespace {

int word_width(const std::vector<uint32_t>& word, const TextMeasurer& m) {
    int w = 0;
    for (uint32_t cp : word) w += m.advance_px(cp);
    return w;
}

struct WrapState {
    std::vector<std::vector<uint32_t>> lines;
    std::vector<uint32_t> cur;
    int cur_width = 0;
    bool char_broken = false;

    void flush() {
        if (!cur.empty()) {
            lines.push_back(std::move(cur));
            cur.clear();
            cur_width = 0;
        }
    }
};

std::vector<std::vector<uint32_t>> wrap_codepoints(const std::vector<std::vector<uint32_t>>& words,
                                                   const TextMeasurer& m, int max_width_px,
                                                   bool* char_broken_out) {
    WrapState st;
    const int space_w = m.advance_px(' ');
    for (const auto& word : words) {
        const int w = word_width(word, m);
        if (w > max_width_px) {
            // Oversized word: emit the largest fitting prefix per line; the
            // final fragment stays open for further packing.
            st.flush();
            st.char_broken = true;
            size_t i = 0;
            while (i < word.size()) {
                std::vector<uint32_t> seg;
                int seg_w = 0;
                while (i < word.size()) {
                    const int adv = m.advance_px(word[i]);
                    if (!seg.empty() && seg_w + adv > max_width_px) break;
                    seg.push_back(word[i]);
                    seg_w += adv;
                    ++i;
                }
                if (i < word.size()) {
                    st.lines.push_back(std::move(seg));
                } else {
                    st.cur = std::move(seg);
                    st.cur_width = seg_w;
                }
            }
            continue;
        }
        if (st.cur.empty()) {
            st.cur = word;
            st.cur_width = w;
        } else if (st.cur_width + space_w + w <= max_width_px) {
            st.cur.push_back(' ');
            st.cur.insert(st.cur.end(), word.begin(), word.end());
            st.cur_width += space_w + w;
        } else {
            st.flush();
            st.cur = word;
            st.cur_width = w;
        }
    }
    st.flush();
    if (char_broken_out) *char_broken_out = st.char_broken;
    return st.lines;
}

} // namespace

std::vector<std::string> wrap_text(std::string_view text, const TextMeasurer& measurer,
                                   int max_width_px) {
    std::vector<std::string> out;
    for (const auto& line : wrap_codepoints(split_words(text), measurer, max_width_px, nullptr))
        out.push_back(util::utf8_encode(line));
    return out;
}

std::vector<std::string> wrap_text(std::string_view text, int font_size_pt, int max_width_px,
                                   const font::Face& face) {
    FaceMeasurer m(face, font_size_pt);
    return wrap_text(text, m, max_width_px);
}

std::string LineLayout::text() const { return util::utf8_encode(codepoints); }

std::vector<std::string> LayoutResult::line_texts() const {
    std::vector<std::string> out;
    out.reserve(lines.size());
    for (const auto& line : lines) out.push_back(line.text());
    return out;
}

namespace {

LineLayout measure_line(const std::vector<uint32_t>& cps, const font::Face& face, int size_px) {
    LineLayout line;
    line.codepoints = cps;
    int pen = 0;
    int ink_left = INT_MAX, ink_right = INT_MIN, ink_top = INT_MAX, ink_bottom = INT_MIN;
    for (uint32_t cp : cps) {
        const uint16_t gid = face.glyph_index(cp);
        if (gid == 0 && cp != 0) ++line.missing_glyphs;
        const auto box = face.pixel_box(gid, size_px);
        if (!box.empty) {
            ink_left = std::min(ink_left, pen + box.xmin);
            ink_right = std::max(ink_right, pen + box.xmax);
            ink_top = std::min(ink_top, -box.ymax);
            ink_bottom = std::max(ink_bottom, -box.ymin);
        }
        pen += face.advance_px(gid, size_px);
    }
    line.advance_px = pen;
    line.has_ink = ink_left != INT_MAX;
    if (!line.has_ink) {
        ink_left = ink_right = ink_top = ink_bottom = 0;
    }
    line.ink_left = ink_left;
    line.ink_right = ink_right;
    line.ink_top = ink_top;
    line.ink_bottom = ink_bottom;
    line.pen_shift = std::max(0, -ink_left);
    return line;
}

// Rendered horizontal extent of a line after the pen shift.
int line_extent(const LineLayout& line) {
    return std::max(line.advance_px, line.ink_right) + line.pen_shift;
}

int total_height(size_t n_lines, int line_height, int spacing) {
    if (n_lines == 0) return 0;
    return static_cast<int>(n_lines) * line_height + (static_cast<int>(n_lines) - 1) * spacing;
}

std::vector<int> candidate_sizes(const LayoutParams& p) {
    std::vector<int> sizes;
    int s = p.default_font_size_pt;
    while (s > p.min_font_size_pt) {
        sizes.push_back(s);
        s -= p.font_size_step_pt;
    }
    sizes.push_back(p.min_font_size_pt);
    return sizes;
}

struct SizedLayout {
    std::vector<LineLayout> lines;
    bool char_broken = false;
    bool width_ok = true;
};

SizedLayout layout_at_size(const std::vector<std::vector<uint32_t>>& words, int size,
                           const LayoutParams& params, const font::Face& face) {
    SizedLayout out;
    FaceMeasurer m(face, size);
    const auto lines = wrap_codepoints(words, m, params.avail_width(), &out.char_broken);
    out.lines.reserve(lines.size());
    for (const auto& cps : lines) {
        out.lines.push_back(measure_line(cps, face, size));
        if (line_extent(out.lines.back()) > params.avail_width()) out.width_ok = false;
    }
    return out;
}

void finalize(LayoutResult& result, const LayoutParams& params, const font::Face& face) {
    const int size = result.chosen_font_size_pt;
    result.ascent_px = face.ascent_px(size);
    result.line_height_px = face.line_height_px(size);
    const int pad = params.padding_px;
    int x0 = INT_MAX, y0 = INT_MAX, x1 = INT_MIN, y1 = INT_MIN;
    result.missing_glyphs = 0;
    for (size_t i = 0; i < result.lines.size(); ++i) {
        const auto& line = result.lines[i];
        result.missing_glyphs += line.missing_glyphs;
        if (!line.has_ink) continue;
        const int baseline =
            pad + static_cast<int>(i) * (result.line_height_px + params.line_spacing_px) +
            result.ascent_px;
        x0 = std::min(x0, pad + line.pen_shift + line.ink_left);
        x1 = std::max(x1, pad + line.pen_shift + line.ink_right);
        y0 = std::min(y0, baseline + line.ink_top);
        y1 = std::max(y1, baseline + line.ink_bottom);
    }
    if (x0 == INT_MAX) {
        result.text_bbox = {pad, pad, pad, pad};
        return;
    }
    // The renderer clips to the padded region, so the reported box does too.
    result.text_bbox.x0 = std::max(x0, pad);
    result.text_bbox.y0 = std::max(y0, pad);
    result.text_bbox.x1 = std::min(x1, params.canvas_width_px - pad);
    result.text_bbox.y1 = std::min(y1, params.canvas_height_px - pad);
}

} // namespace

bool layout_fits(std::string_view text, int font_size_pt, const LayoutParams& params,
                 const font::Face& face) {
    const auto words = split_words(text);
    const auto sized = layout_at_size(words, font_size_pt, params, face);
    if (!sized.width_ok) return false;
    return total_height(sized.lines.size(), face.line_height_px(font_size_pt),
                        params.line_spacing_px) <= params.avail_height();
}

LayoutResult fit_layout(std::string_view text, const LayoutParams& params,
                        const font::Face& face) {
    params.validate();
    const auto words = split_words(text);

    LayoutResult result;
    for (int size : candidate_sizes(params)) {
        auto sized = layout_at_size(words, size, params, face);
        if (!sized.width_ok) continue;
        if (total_height(sized.lines.size(), face.line_height_px(size), params.line_spacing_px) >
            params.avail_height())
            continue;
        result.chosen_font_size_pt = size;
        result.lines = std::move(sized.lines);
        result.char_broken = sized.char_broken;
        finalize(result, params, face);
        return result;
    }

    // Nothing fits even at the minimum size: keep whole leading lines and mark.
    const int size = params.min_font_size_pt;
    auto sized = layout_at_size(words, size, params, face);
    const int lh = face.line_height_px(size);
    const int sp = params.line_spacing_px;
    size_t keep = 0;
    if (lh > 0) {
        keep = static_cast<size_t>(std::max(0, (params.avail_height() + sp) / (lh + sp)));
        keep = std::min(keep, sized.lines.size());
    }
    result.chosen_font_size_pt = size;
    result.truncated = true;
    result.char_broken = sized.char_broken;
    result.lines.assign(sized.lines.begin(), sized.lines.begin() + static_cast<long>(keep));
    if (!result.lines.empty()) {
        auto cps = result.lines.back().codepoints;
        cps.push_back(kTruncationMarker);
        LineLayout marked = measure_line(cps, face, size);
        // Drop trailing content until the marker fits the available width.
        while (line_extent(marked) > params.avail_width() && marked.codepoints.size() > 1) {
            cps.erase(cps.end() - 2);
            marked = measure_line(cps, face, size);
        }
        result.lines.back() = std::move(marked);
    }
    finalize(result, params, face);
    return result;
}

} // namespace tpi::render
