#pragma once

#include "tpi/dataset_io.hpp"
#include "tpi/layout.hpp"
#include "tpi/raster.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tpi::render {

struct RenderedImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels; // row-major RGB
    LayoutResult layout;
};

// Per-worker glyph raster cache, one GlyphRaster per font size encountered.
class RenderContext {
public:
    explicit RenderContext(const font::Face& face) : face_(&face) {}
    const font::Face& face() const { return *face_; }
    raster::GlyphRaster& raster_for(int size_px);

private:
    const font::Face* face_;
    std::unordered_map<int, raster::GlyphRaster> rasters_;
};

// The deterministic renderer: background fill, fitted layout, lines
// rasterized top-left anchored at (padding, padding) in the text color.
// Output depends only on (text, params, bundled font, build).
RenderedImage render_tpi(std::string_view text, const LayoutParams& params,
                         RenderContext& ctx);
RenderedImage render_tpi(std::string_view text, const LayoutParams& params,
                         const font::Face& face);

struct BatchInput {
    std::string id;
    std::string text;
};

struct BatchResult {
    std::vector<io::ManifestRow> rows; // input order
    size_t images_written = 0;
    double wall_seconds = 0.0;
    double images_per_sec = 0.0;
};

// Renders one PNG per record into out_dir (named <id>.png) plus a JSONL
// manifest. Data-parallel over records; manifest order and pixel bytes are
// independent of the worker count. Duplicate or path-unsafe ids are
// rejected before any work; an I/O failure aborts with a partial-output
// report in the exception text.
BatchResult render_batch(const std::vector<BatchInput>& records, const LayoutParams& params,
                         unsigned workers, const std::filesystem::path& out_dir,
                         const font::Face& face,
                         const std::string& manifest_name = "manifest.jsonl");

} // namespace tpi::render
