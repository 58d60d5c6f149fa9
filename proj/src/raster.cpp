#include "tpi/raster.hpp"

#include <algorithm>
#include <cmath>

namespace tpi::raster {

Coverage::Coverage(int width, int height)
    : width_(width), height_(height), stride_(width + 2),
      acc_(static_cast<size_t>(stride_) * std::max(height, 0), 0.f) {}

// Signed trapezoid accumulation per scanline cell; the row-wise running sum
// in finish() reconstructs coverage. Adapted from the classic accumulation
// rasterizer used by font-rs and fpng-era sprite engines.
void Coverage::line(float x0, float y0, float x1, float y1) {
    if (y0 == y1) return;
    float dir = 1.f;
    if (y1 < y0) {
        std::swap(x0, x1);
        std::swap(y0, y1);
        dir = -1.f;
    }
    const float dxdy = (x1 - x0) / (y1 - y0);
    float x = x0;
    int y = static_cast<int>(std::floor(y0));
    if (y < 0) {
        x += dxdy * (0.f - y0);
        y = 0;
    }
    const int y_end = std::min(height_, static_cast<int>(std::ceil(y1)));
    for (; y < y_end; ++y) {
        const size_t row = static_cast<size_t>(y) * stride_;
        const float dy = std::min(static_cast<float>(y + 1), y1) - std::max(static_cast<float>(y), y0);
        if (dy <= 0.f) {
            continue;
        }
        const float xnext = x + dxdy * dy;
        const float d = dy * dir;
        float xa = x, xb = xnext;
        if (xb < xa) std::swap(xa, xb);
        xa = std::clamp(xa, 0.f, static_cast<float>(width_));
        xb = std::clamp(xb, 0.f, static_cast<float>(width_));
        const float x0floor = std::floor(xa);
        const int x0i = static_cast<int>(x0floor);
        const float x1ceil = std::ceil(xb);
        const int x1i = static_cast<int>(x1ceil);
        if (x1i <= x0i + 1) {
            // the span fits in one cell
            const float xmf = 0.5f * (xa + xb) - x0floor;
            acc_[row + x0i] += d - d * xmf;
            acc_[row + x0i + 1] += d * xmf;
        } else {
            const float s = 1.f / (xb - xa);
            const float x0f = xa - x0floor;
            const float a0 = 0.5f * s * (1.f - x0f) * (1.f - x0f);
            const float x1f = xb - x1ceil + 1.f;
            const float am = 0.5f * s * x1f * x1f;
            acc_[row + x0i] += d * a0;
            if (x1i == x0i + 2) {
                acc_[row + x0i + 1] += d * (1.f - a0 - am);
            } else {
                const float a1 = s * (1.5f - x0f);
                acc_[row + x0i + 1] += d * (a1 - a0);
                for (int xi = x0i + 2; xi < x1i - 1; ++xi) acc_[row + xi] += d * s;
                const float a2 = a1 + static_cast<float>(x1i - x0i - 3) * s;
                acc_[row + x1i - 1] += d * (1.f - a2 - am);
            }
            acc_[row + x1i] += d * am;
        }
        x = xnext;
    }
}

void Coverage::quad(float x0, float y0, float cx, float cy, float x1, float y1) {
    const float devx = x0 - 2.f * cx + x1;
    const float devy = y0 - 2.f * cy + y1;
    const float devsq = devx * devx + devy * devy;
    if (devsq < 0.333f) {
        line(x0, y0, x1, y1);
        return;
    }
    const float tol = 3.f;
    const int n = 1 + static_cast<int>(std::floor(std::sqrt(std::sqrt(tol * devsq))));
    float px = x0, py = y0;
    const float nrecip = 1.f / static_cast<float>(n);
    float t = 0.f;
    for (int i = 0; i < n - 1; ++i) {
        t += nrecip;
        const float mt = 1.f - t;
        const float qx = mt * mt * x0 + 2.f * mt * t * cx + t * t * x1;
        const float qy = mt * mt * y0 + 2.f * mt * t * cy + t * t * y1;
        line(px, py, qx, qy);
        px = qx;
        py = qy;
    }
    line(px, py, x1, y1);
}

std::vector<uint8_t> Coverage::finish() const {
    std::vector<uint8_t> out(static_cast<size_t>(width_) * height_);
    for (int y = 0; y < height_; ++y) {
        const float* row = acc_.data() + static_cast<size_t>(y) * stride_;
        float sum = 0.f;
        for (int x = 0; x < width_; ++x) {
            sum += row[x];
            float v = std::abs(sum);
            if (v > 1.f) v = 1.f;
            out[static_cast<size_t>(y) * width_ + x] = static_cast<uint8_t>(255.f * v + 0.5f);
        }
    }
    return out;
}

GlyphRaster::GlyphRaster(const font::Face& face, int size_px)
    : face_(&face), size_px_(size_px) {}

const GlyphBitmap& GlyphRaster::bitmap(uint16_t glyph_id) {
    auto it = cache_.find(glyph_id);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(glyph_id, rasterize(glyph_id)).first->second;
}

GlyphBitmap GlyphRaster::rasterize(uint16_t glyph_id) const {
    GlyphBitmap bmp;
    const auto box = face_->pixel_box(glyph_id, size_px_);
    if (box.empty) return bmp;
    bmp.left = box.xmin;
    bmp.top = -box.ymax; // y-down placement relative to the baseline
    bmp.width = box.xmax - box.xmin;
    bmp.height = box.ymax - box.ymin;
    if (bmp.width <= 0 || bmp.height <= 0) return bmp;

    const float scale = static_cast<float>(size_px_) / static_cast<float>(face_->units_per_em());
    const float ox = static_cast<float>(bmp.left);
    const float oy = static_cast<float>(bmp.top);
    auto to_px = [&](const font::OutlinePoint& p) {
        return std::pair<float, float>(p.x * scale - ox, -p.y * scale - oy);
    };

    Coverage cov(bmp.width, bmp.height);
    const auto outline = face_->outline(glyph_id);
    for (const auto& contour : outline.contours) {
        if (contour.size() < 2) continue;
        // Normalize the TrueType on/off pattern to an explicit start point.
        font::OutlinePoint start;
        size_t first = 0;
        if (contour.front().on_curve) {
            start = contour.front();
            first = 1;
        } else if (contour.back().on_curve) {
            start = contour.back();
        } else {
            start = {0.5f * (contour.front().x + contour.back().x),
                     0.5f * (contour.front().y + contour.back().y), true};
        }
        auto [sx, sy] = to_px(start);
        float curx = sx, cury = sy;
        bool have_ctrl = false;
        float ctrlx = 0.f, ctrly = 0.f;

        auto emit = [&](const font::OutlinePoint& p) {
            auto [px, py] = to_px(p);
            if (p.on_curve) {
                if (have_ctrl) {
                    cov.quad(curx, cury, ctrlx, ctrly, px, py);
                    have_ctrl = false;
                } else {
                    cov.line(curx, cury, px, py);
                }
                curx = px;
                cury = py;
            } else {
                if (have_ctrl) {
                    const float mx = 0.5f * (ctrlx + px);
                    const float my = 0.5f * (ctrly + py);
                    cov.quad(curx, cury, ctrlx, ctrly, mx, my);
                    curx = mx;
                    cury = my;
                }
                ctrlx = px;
                ctrly = py;
                have_ctrl = true;
            }
        };

        const size_t n = contour.size();
        for (size_t k = first; k < n; ++k) emit(contour[k]);
        // close
        if (have_ctrl)
            cov.quad(curx, cury, ctrlx, ctrly, sx, sy);
        else
            cov.line(curx, cury, sx, sy);
    }

    bmp.coverage = cov.finish();
    return bmp;
}

} // namespace tpi::raster
