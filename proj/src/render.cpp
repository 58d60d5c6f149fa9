#include "tpi/render.hpp"
#include "tpi/errors.hpp"
#include "tpi/log.hpp"
#include "tpi/png_io.hpp"
#include "tpi/util.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <thread>
#include <unordered_set>

namespace tpi::render {

raster::GlyphRaster& RenderContext::raster_for(int size_px) {
    auto it = rasters_.find(size_px);
    if (it != rasters_.end()) return it->second;
    return rasters_.emplace(size_px, raster::GlyphRaster(*face_, size_px)).first->second;
}

namespace {

inline uint8_t blend_channel(uint8_t bg, uint8_t fg, uint8_t cov) {
    return static_cast<uint8_t>((static_cast<int>(bg) * (255 - cov) + static_cast<int>(fg) * cov + 127) / 255);
}

void blit_glyph(std::vector<uint8_t>& pixels, int canvas_w, int clip_x0, int clip_y0,
                int clip_x1, int clip_y1, const raster::GlyphBitmap& bmp, int pen_x,
                int baseline_y, Rgb bg, Rgb fg) {
    const int gx0 = pen_x + bmp.left;
    const int gy0 = baseline_y + bmp.top;
    const int x0 = std::max(gx0, clip_x0);
    const int y0 = std::max(gy0, clip_y0);
    const int x1 = std::min(gx0 + bmp.width, clip_x1);
    const int y1 = std::min(gy0 + bmp.height, clip_y1);
    for (int y = y0; y < y1; ++y) {
        const uint8_t* src = bmp.coverage.data() + static_cast<size_t>(y - gy0) * bmp.width;
        uint8_t* dst = pixels.data() + (static_cast<size_t>(y) * canvas_w + x0) * 3;
        for (int x = x0; x < x1; ++x, dst += 3) {
            const uint8_t cov = src[x - gx0];
            if (cov == 0) continue;
            if (cov == 255 ) {
                dst[0] = fg.r;
                dst[1] = fg.g;
                dst[2] = fg.b;
            } else {
                dst[0] = blend_channel(bg.r, fg.r, cov);
                dst[1] = blend_channel(bg.g, fg.g, cov);
                dst[2] = blend_channel(bg.b, fg.b, cov);
            }
        }
    }
}

} // namespace

RenderedImage render_tpi(std::string_view text, const LayoutParams& params, RenderContext& ctx) {
    params.validate();
    RenderedImage img;
    img.width = params.canvas_width_px;
    img.height = params.canvas_height_px;
    img.pixels.resize(static_cast<size_t>(img.width) * img.height * 3);
    for (size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = params.background_color.r;
        img.pixels[i + 1] = params.background_color.g;
        img.pixels[i + 2] = params.background_color.b;
    }

    img.layout = fit_layout(text, params, ctx.face());
    if (img.layout.lines.empty()) return img;

    auto& raster = ctx.raster_for(img.layout.chosen_font_size_pt);
    const int pad = params.padding_px;
    // Ink is confined to the padded region; the fitter guarantees normal text
    // never reaches these clip edges.
    const int clip_x0 = pad, clip_y0 = pad;
    const int clip_x1 = params.canvas_width_px - pad;
    const int clip_y1 = params.canvas_height_px - pad;

    for (size_t i = 0; i < img.layout.lines.size(); ++i) {
        const auto& line = img.layout.lines[i];
        const int baseline = pad +
                             static_cast<int>(i) *
                                 (img.layout.line_height_px + params.line_spacing_px) +
                             img.layout.ascent_px;
        int pen = pad + line.pen_shift;
        for (uint32_t cp : line.codepoints) {
            const uint16_t gid = ctx.face().glyph_index(cp);
            const auto& bmp = raster.bitmap(gid);
            if (bmp.width > 0)
                blit_glyph(img.pixels, img.width, clip_x0, clip_y0, clip_x1, clip_y1, bmp, pen,
                           baseline, params.background_color, params.text_color);
            pen += ctx.face().advance_px(gid, img.layout.chosen_font_size_pt);
        }
    }
    return img;
}

RenderedImage render_tpi(std::string_view text, const LayoutParams& params,
                         const font::Face& face) {
    RenderContext ctx(face);
    return render_tpi(text, params, ctx);
}

namespace {

bool id_is_path_safe(const std::string& id) {
    if (id.empty() || id == "." || id == "..") return false;
    for (char c : id)
        if (c == '/' || c == '\\' || c == '\0') return false;
    return true;
}

} // namespace

BatchResult render_batch(const std::vector<BatchInput>& records, const LayoutParams& params,
                         unsigned workers, const std::filesystem::path& out_dir,
                         const font::Face& face, const std::string& manifest_name) {
    params.validate();
    if (workers == 0) workers = 1;

    {
        std::unordered_set<std::string> seen;
        for (const auto& rec : records) {
            if (!id_is_path_safe(rec.id))
                throw InputError("record id is not filename-safe: \"" + rec.id + "\"");
            if (!seen.insert(rec.id).second)
                throw InputError("duplicate record id: \"" + rec.id + "\"");
        }
    }

    std::filesystem::create_directories(out_dir);
    const auto t0 = std::chrono::steady_clock::now();

    BatchResult result;
    result.rows.resize(records.size());

    struct Rendered {
        std::vector<uint8_t> png;
        io::ManifestRow row;
    };

    std::vector<RenderContext> contexts;
    contexts.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) contexts.emplace_back(face);

    // Render in chunks: data-parallel rasterization, then one writer emits
    // files in input order so failures leave a clean prefix on disk.
    const size_t chunk = std::max<size_t>(workers * 32, 64);
    std::vector<Rendered> buf;
    size_t written = 0;
    for (size_t base = 0; base < records.size(); base += chunk) {
        const size_t count = std::min(chunk, records.size() - base);
        buf.assign(count, {});
        if (workers == 1) {
            for (size_t k = 0; k < count; ++k) {
                const auto& rec = records[base + k];
                auto img = render_tpi(rec.text, params, contexts[0]);
                buf[k].png = png::encode_rgb(img.pixels.data(), img.width, img.height);
                buf[k].row = {rec.id, rec.id + ".png", img.layout.chosen_font_size_pt,
                              static_cast<int>(img.layout.lines.size()), img.layout.truncated,
                              img.layout.missing_glyphs};
            }
        } else {
            std::vector<std::thread> threads;
            threads.reserve(workers);
            for (unsigned w = 0; w < workers; ++w) {
                threads.emplace_back([&, w] {
                    for (size_t k = w; k < count; k += workers) {
                        const auto& rec = records[base + k];
                        auto img = render_tpi(rec.text, params, contexts[w]);
                        buf[k].png = png::encode_rgb(img.pixels.data(), img.width, img.height);
                        buf[k].row = {rec.id, rec.id + ".png", img.layout.chosen_font_size_pt,
                                      static_cast<int>(img.layout.lines.size()),
                                      img.layout.truncated, img.layout.missing_glyphs};
                    }
                });
            }
            for (auto& t : threads) t.join();
        }
        for (size_t k = 0; k < count; ++k) {
            const auto& rec = records[base + k];
            try {
                util::write_file_bytes(out_dir / (rec.id + ".png"), buf[k].png.data(),
                                       buf[k].png.size());
            } catch (const std::exception& e) {
                throw InputError("render_batch aborted after writing " + std::to_string(written) +
                                 "/" + std::to_string(records.size()) + " images: " + e.what());
            }
            result.rows[base + k] = buf[k].row;
            ++written;
            if (written % 100 == 0)
                log::info("rendered", {{"done", std::to_string(written)},
                                       {"total", std::to_string(records.size())}});
        }
    }

    io::write_manifest(result.rows, out_dir / manifest_name);
    const auto t1 = std::chrono::steady_clock::now();
    result.images_written = written;
    result.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.images_per_sec =
        result.wall_seconds > 0 ? static_cast<double>(written) / result.wall_seconds : 0.0;
    return result;
}

} // namespace tpi::render
