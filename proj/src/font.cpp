#include "tpi/font.hpp"
#include "tpi/errors.hpp"
#include "tpi/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace tpi::font {

namespace {

constexpr uint32_t tag4(const char* s) {
    return (static_cast<uint32_t>(static_cast<uint8_t>(s[0])) << 24) |
           (static_cast<uint32_t>(static_cast<uint8_t>(s[1])) << 16) |
           (static_cast<uint32_t>(static_cast<uint8_t>(s[2])) << 8) |
           static_cast<uint32_t>(static_cast<uint8_t>(s[3]));
}

struct Reader {
    const uint8_t* base;
    size_t size;
    std::string name;

    void need(size_t off, size_t n) const {
        if (off + n > size) throw FontError(name + ": truncated table data");
    }
    uint8_t u8(size_t off) const {
        need(off, 1);
        return base[off];
    }
    uint16_t u16(size_t off) const {
        need(off, 2);
        return static_cast<uint16_t>((base[off] << 8) | base[off + 1]);
    }
    int16_t i16(size_t off) const { return static_cast<int16_t>(u16(off)); }
    uint32_t u32(size_t off) const {
        need(off, 4);
        return (static_cast<uint32_t>(base[off]) << 24) |
               (static_cast<uint32_t>(base[off + 1]) << 16) |
               (static_cast<uint32_t>(base[off + 2]) << 8) |
               static_cast<uint32_t>(base[off + 3]);
    }
};

// Rounds units*size/upem to the nearest pixel (half up), exact in integers.
int round_scale(int64_t units, int size_px, int upem) {
    int64_t num = units * size_px;
    int64_t q;
    if (num >= 0)
        q = (2 * num + upem) / (2 * static_cast<int64_t>(upem));
    else
        q = -((-2 * num + upem - 1) / (2 * static_cast<int64_t>(upem))); // round half up
    return static_cast<int>(q);
}

int floor_scale(int64_t units, int size_px, int upem) {
    int64_t num = units * size_px;
    int64_t q = num >= 0 ? num / upem : -((-num + upem - 1) / upem);
    return static_cast<int>(q);
}

int ceil_scale(int64_t units, int size_px, int upem) {
    int64_t num = units * size_px;
    int64_t q = num >= 0 ? (num + upem - 1) / upem : -((-num) / upem);
    return static_cast<int>(q);
}

// Composite glyph flags
constexpr uint16_t ARG_1_AND_2_ARE_WORDS = 0x0001;
constexpr uint16_t ARGS_ARE_XY_VALUES = 0x0002;
constexpr uint16_t WE_HAVE_A_SCALE = 0x0008;
constexpr uint16_t MORE_COMPONENTS = 0x0020;
constexpr uint16_t WE_HAVE_AN_X_AND_Y_SCALE = 0x0040;
constexpr uint16_t WE_HAVE_A_TWO_BY_TWO = 0x0080;

// Simple glyph point flags
constexpr uint8_t ON_CURVE = 0x01;
constexpr uint8_t X_SHORT = 0x02;
constexpr uint8_t Y_SHORT = 0x04;
constexpr uint8_t REPEAT = 0x08;
constexpr uint8_t X_SAME_OR_POS = 0x10;
constexpr uint8_t Y_SAME_OR_POS = 0x20;

float f2dot14(int16_t v) { return static_cast<float>(v) / 16384.0f; }

} // namespace

Face Face::load_file(const std::filesystem::path& path) {
    return load_memory(util::read_file_bytes(path), path.filename().string());
}

Face Face::load_bundled(const std::string& face_id, const std::filesystem::path& assets_dir) {
    // Bundled faces keep layout reproducible; host fonts are never consulted.
    if (face_id == "DejaVu Sans")
        return load_file(assets_dir / "fonts" / "DejaVuSans.ttf");
    throw FontError("unknown bundled face: \"" + face_id + "\" (available: \"DejaVu Sans\")");
}

Face Face::load_memory(std::vector<uint8_t> data, std::string name) {
    Face face;
    face.data_ = std::move(data);
    face.name_ = std::move(name);
    face.parse();
    return face;
}

const uint8_t* Face::table(uint32_t tag, size_t* length) const {
    for (const auto& t : tables_) {
        if (t.tag == tag) {
            if (length) *length = t.length;
            return data_.data() + t.offset;
        }
    }
    return nullptr;
}

void Face::parse() {
    Reader r{data_.data(), data_.size(), name_};
    const uint32_t version = r.u32(0);
    if (version != 0x00010000 && version != tag4("true"))
        throw FontError(name_ + ": not a TrueType font (sfnt version mismatch)");
    const uint16_t num_tables = r.u16(4);
    for (uint16_t i = 0; i < num_tables; ++i) {
        size_t rec = 12 + i * 16u;
        TableEntry e{r.u32(rec), r.u32(rec + 8), r.u32(rec + 12)};
        if (e.offset + static_cast<uint64_t>(e.length) > data_.size())
            throw FontError(name_ + ": table extends past end of file");
        tables_.push_back(e);
    }

    auto require = [&](const char* tag) -> std::pair<size_t, size_t> {
        size_t len = 0;
        const uint8_t* p = table(tag4(tag), &len);
        if (!p) throw FontError(name_ + ": missing required table " + tag);
        return {static_cast<size_t>(p - data_.data()), len};
    };

    auto [head_off, head_len] = require("head");
    units_per_em_ = r.u16(head_off + 18);
    if (units_per_em_ == 0) throw FontError(name_ + ": unitsPerEm is zero");
    long_loca_ = r.i16(head_off + 50) != 0;

    auto [maxp_off, maxp_len] = require("maxp");
    num_glyphs_ = r.u16(maxp_off + 4);

    auto [hhea_off, hhea_len] = require("hhea");
    ascender_ = r.i16(hhea_off + 4);
    descender_ = r.i16(hhea_off + 6);
    line_gap_ = r.i16(hhea_off + 8);
    num_hmetrics_ = r.u16(hhea_off + 34);
    if (num_hmetrics_ == 0) throw FontError(name_ + ": numberOfHMetrics is zero");

    std::tie(hmtx_offset_, hmtx_length_) = require("hmtx");
    std::tie(loca_offset_, loca_length_) = require("loca");
    std::tie(glyf_offset_, glyf_length_) = require("glyf");

    // cmap: prefer a format 12 subtable (full Unicode), otherwise format 4.
    auto [cmap_off, cmap_len] = require("cmap");
    const uint16_t n_sub = r.u16(cmap_off + 2);
    size_t best_off = 0;
    uint16_t best_fmt = 0;
    for (uint16_t i = 0; i < n_sub; ++i) {
        const size_t rec = cmap_off + 4 + i * 8u;
        const uint16_t platform = r.u16(rec);
        const uint16_t encoding = r.u16(rec + 2);
        const size_t sub = cmap_off + r.u32(rec + 4);
        const uint16_t fmt = r.u16(sub);
        const bool unicode = platform == 0 || (platform == 3 && (encoding == 1 || encoding == 10));
        if (!unicode) continue;
        if (fmt == 12 && best_fmt != 12) {
            best_off = sub;
            best_fmt = 12;
        } else if (fmt == 4 && best_fmt == 0) {
            best_off = sub;
            best_fmt = 4;
        }
    }
    if (best_fmt == 0) throw FontError(name_ + ": no usable Unicode cmap subtable (format 4 or 12)");
    cmap_sub_offset_ = best_off;
    cmap_format_ = best_fmt;
}

uint16_t Face::glyph_index(uint32_t cp) const {
    Reader r{data_.data(), data_.size(), name_};
    if (cmap_format_ == 12) {
        const uint32_t n_groups = r.u32(cmap_sub_offset_ + 12);
        size_t lo = 0, hi = n_groups;
        while (lo < hi) {
            const size_t mid = (lo + hi) / 2;
            const size_t g = cmap_sub_offset_ + 16 + mid * 12;
            const uint32_t start = r.u32(g);
            const uint32_t end = r.u32(g + 4);
            if (cp < start)
                hi = mid;
            else if (cp > end)
                lo = mid + 1;
            else {
                uint32_t gid = r.u32(g + 8) + (cp - start);
                return gid < num_glyphs_ ? static_cast<uint16_t>(gid) : 0;
            }
        }
        return 0;
    }
    // format 4 (BMP only)
    if (cp > 0xFFFF) return 0;
    const size_t sub = cmap_sub_offset_;
    const uint16_t seg_x2 = r.u16(sub + 6);
    const size_t end_codes = sub + 14;
    const size_t start_codes = end_codes + seg_x2 + 2;
    const size_t id_deltas = start_codes + seg_x2;
    const size_t id_range_offsets = id_deltas + seg_x2;
    // Binary search the first segment with endCode >= cp.
    size_t lo = 0, hi = seg_x2 / 2;
    while (lo < hi) {
        const size_t mid = (lo + hi) / 2;
        if (r.u16(end_codes + mid * 2) < cp)
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo >= static_cast<size_t>(seg_x2 / 2)) return 0;
    const uint16_t start = r.u16(start_codes + lo * 2);
    if (cp < start) return 0;
    const int16_t delta = r.i16(id_deltas + lo * 2);
    const uint16_t range_offset = r.u16(id_range_offsets + lo * 2);
    uint16_t gid;
    if (range_offset == 0) {
        gid = static_cast<uint16_t>((static_cast<int>(cp) + delta) & 0xFFFF);
    } else {
        const size_t addr = id_range_offsets + lo * 2 + range_offset + 2 * (cp - start);
        gid = r.u16(addr);
        if (gid != 0) gid = static_cast<uint16_t>((gid + delta) & 0xFFFF);
    }
    return gid < num_glyphs_ ? gid : 0;
}

GlyphMetrics Face::metrics(uint16_t glyph_id) const {
    if (glyph_id >= num_glyphs_) throw FontError(name_ + ": glyph id out of range");
    Reader r{data_.data(), data_.size(), name_};
    GlyphMetrics m;
    m.glyph_id = glyph_id;
    if (glyph_id < num_hmetrics_) {
        m.advance_units = r.u16(hmtx_offset_ + glyph_id * 4u);
        m.lsb_units = r.i16(hmtx_offset_ + glyph_id * 4u + 2);
    } else {
        m.advance_units = r.u16(hmtx_offset_ + (num_hmetrics_ - 1) * 4u);
        const size_t lsb_off = hmtx_offset_ + num_hmetrics_ * 4u + (glyph_id - num_hmetrics_) * 2u;
        m.lsb_units = r.i16(lsb_off);
    }

    size_t off, next;
    if (long_loca_) {
        off = r.u32(loca_offset_ + glyph_id * 4u);
        next = r.u32(loca_offset_ + glyph_id * 4u + 4);
    } else {
        off = r.u16(loca_offset_ + glyph_id * 2u) * 2u;
        next = r.u16(loca_offset_ + glyph_id * 2u + 2) * 2u;
    }
    if (next > off) {
        const size_t g = glyf_offset_ + off;
        m.empty = false;
        m.xmin = r.i16(g + 2);
        m.ymin = r.i16(g + 4);
        m.xmax = r.i16(g + 6);
        m.ymax = r.i16(g + 8);
    }
    return m;
}

void Face::append_outline(uint16_t glyph_id, GlyphOutline& out, float a, float b, float c,
                          float d, float e, float f, int depth) const {
    if (depth > 5) throw FontError(name_ + ": composite glyph nesting too deep");
    if (glyph_id >= num_glyphs_) throw FontError(name_ + ": glyph id out of range");
    Reader r{data_.data(), data_.size(), name_};

    size_t off, next;
    if (long_loca_) {
        off = r.u32(loca_offset_ + glyph_id * 4u);
        next = r.u32(loca_offset_ + glyph_id * 4u + 4);
    } else {
        off = r.u16(loca_offset_ + glyph_id * 2u) * 2u;
        next = r.u16(loca_offset_ + glyph_id * 2u + 2) * 2u;
    }
    if (next <= off) return; // empty glyph (e.g. space)

    size_t g = glyf_offset_ + off;
    const int16_t n_contours = r.i16(g);

    if (n_contours >= 0) {
        // simple glyph
        const size_t n = static_cast<size_t>(n_contours);
        std::vector<uint16_t> end_pts(n);
        size_t p = g + 10;
        for (size_t i = 0; i < n; ++i, p += 2) end_pts[i] = r.u16(p);
        const size_t n_points = n == 0 ? 0 : end_pts.back() + 1u;
        const uint16_t instr_len = r.u16(p);
        p += 2 + instr_len;

        std::vector<uint8_t> flags;
        flags.reserve(n_points);
        while (flags.size() < n_points) {
            const uint8_t flag = r.u8(p++);
            flags.push_back(flag);
            if (flag & REPEAT) {
                uint8_t times = r.u8(p++);
                while (times-- && flags.size() < n_points) flags.push_back(flag);
            }
        }

        std::vector<int> xs(n_points), ys(n_points);
        int v = 0;
        for (size_t i = 0; i < n_points; ++i) {
            const uint8_t flag = flags[i];
            if (flag & X_SHORT) {
                const int dx = r.u8(p++);
                v += (flag & X_SAME_OR_POS) ? dx : -dx;
            } else if (!(flag & X_SAME_OR_POS)) {
                v += r.i16(p);
                p += 2;
            }
            xs[i] = v;
        }
        v = 0;
        for (size_t i = 0; i < n_points; ++i) {
            const uint8_t flag = flags[i];
            if (flag & Y_SHORT) {
                const int dy = r.u8(p++);
                v += (flag & Y_SAME_OR_POS) ? dy : -dy;
            } else if (!(flag & Y_SAME_OR_POS)) {
                v += r.i16(p);
                p += 2;
            }
            ys[i] = v;
        }

        size_t start = 0;
        for (size_t ci = 0; ci < n; ++ci) {
            const size_t end = end_pts[ci];
            std::vector<OutlinePoint> contour;
            contour.reserve(end - start + 1);
            for (size_t i = start; i <= end; ++i) {
                const float x = static_cast<float>(xs[i]);
                const float y = static_cast<float>(ys[i]);
                contour.push_back({a * x + c * y + e, b * x + d * y + f,
                                   (flags[i] & ON_CURVE) != 0});
            }
            if (contour.size() >= 2) out.contours.push_back(std::move(contour));
            start = end + 1;
        }
        return;
    }

    // composite glyph
    size_t p = g + 10;
    for (;;) {
        const uint16_t flags = r.u16(p);
        const uint16_t sub_gid = r.u16(p + 2);
        p += 4;
        float dx = 0.f, dy = 0.f;
        if (flags & ARG_1_AND_2_ARE_WORDS) {
            if (flags & ARGS_ARE_XY_VALUES) {
                dx = static_cast<float>(r.i16(p));
                dy = static_cast<float>(r.i16(p + 2));
            }
            p += 4;
        } else {
            if (flags & ARGS_ARE_XY_VALUES) {
                dx = static_cast<float>(static_cast<int8_t>(r.u8(p)));
                dy = static_cast<float>(static_cast<int8_t>(r.u8(p + 1)));
            }
            p += 2;
        }
        // Point-matching placement (non-XY args) is not used by the bundled
        // face; such components are placed unshifted.
        float sa = 1.f, sb = 0.f, sc = 0.f, sd = 1.f;
        if (flags & WE_HAVE_A_SCALE) {
            sa = sd = f2dot14(r.i16(p));
            p += 2;
        } else if (flags & WE_HAVE_AN_X_AND_Y_SCALE) {
            sa = f2dot14(r.i16(p));
            sd = f2dot14(r.i16(p + 2));
            p += 4;
        } else if (flags & WE_HAVE_A_TWO_BY_TWO) {
            sa = f2dot14(r.i16(p));
            sb = f2dot14(r.i16(p + 2));
            sc = f2dot14(r.i16(p + 4));
            sd = f2dot14(r.i16(p + 6));
            p += 8;
        }
        // compose: child point -> scale -> translate -> parent transform
        const float na = a * sa + c * sb;
        const float nb = b * sa + d * sb;
        const float nc = a * sc + c * sd;
        const float nd = b * sc + d * sd;
        const float ne = a * dx + c * dy + e;
        const float nf = b * dx + d * dy + f;
        append_outline(sub_gid, out, na, nb, nc, nd, ne, nf, depth + 1);
        if (!(flags & MORE_COMPONENTS)) break;
    }
}

GlyphOutline Face::outline(uint16_t glyph_id) const {
    GlyphOutline out;
    append_outline(glyph_id, out, 1.f, 0.f, 0.f, 1.f, 0.f, 0.f, 0);
    return out;
}

int Face::advance_px(uint16_t glyph_id, int size_px) const {
    return round_scale(metrics(glyph_id).advance_units, size_px, units_per_em_);
}

Face::PixelBox Face::pixel_box(uint16_t glyph_id, int size_px) const {
    const GlyphMetrics m = metrics(glyph_id);
    PixelBox box;
    if (m.empty) return box;
    box.empty = false;
    box.xmin = floor_scale(m.xmin, size_px, units_per_em_);
    box.ymin = floor_scale(m.ymin, size_px, units_per_em_);
    box.xmax = ceil_scale(m.xmax, size_px, units_per_em_);
    box.ymax = ceil_scale(m.ymax, size_px, units_per_em_);
    return box;
}

int Face::ascent_px(int size_px) const { return ceil_scale(ascender_, size_px, units_per_em_); }

int Face::descent_px(int size_px) const { return ceil_scale(-descender_, size_px, units_per_em_); }

int Face::line_gap_px(int size_px) const { return round_scale(line_gap_, size_px, units_per_em_); }

int Face::line_height_px(int size_px) const {
    return ascent_px(size_px) + descent_px(size_px) + line_gap_px(size_px);
}

} // namespace tpi::font
