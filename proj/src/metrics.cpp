#include "tpi/metrics.hpp"
#include "tpi/errors.hpp"
#include "tpi/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Dense>

namespace tpi::metrics {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    };
    for (uint32_t cp : util::utf8_decode(text)) {
        bool word_char = (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
                         (cp >= 'A' && cp <= 'Z') || cp > 0x7F;
        if (!word_char) {
            flush();
            continue;
        }
        if (cp >= 'A' && cp <= 'Z') cp = cp - 'A' + 'a';
        util::utf8_append(cur, cp);
    }
    flush();
    return tokens;
}

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    // Two-row DP, O(|a|*|b|) time, O(min) space on the shorter side.
    const auto& s = a.size() <= b.size() ? a : b;
    const auto& l = a.size() <= b.size() ? b : a;
    std::vector<size_t> prev(s.size() + 1, 0), cur(s.size() + 1, 0);
    for (size_t i = 1; i <= l.size(); ++i) {
        for (size_t j = 1; j <= s.size(); ++j) {
            if (l[i - 1] == s[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[s.size()];
}

double rouge_l_f1(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const size_t lcs = lcs_length(a, b);
    if (lcs == 0) return 0.0;
    const double p = static_cast<double>(lcs) / static_cast<double>(a.size());
    const double r = static_cast<double>(lcs) / static_cast<double>(b.size());
    return 2.0 * p * r / (p + r);
}

double linear_cka(const std::vector<float>& x, size_t x_rows, size_t x_cols,
                  const std::vector<float>& y, size_t y_rows, size_t y_cols) {
    if (x_rows != y_rows) throw InputError("linear_cka: row-count mismatch");
    if (x_rows < 2) throw InputError("linear_cka: need at least 2 rows");
    if (x.size() != x_rows * x_cols || y.size() != y_rows * y_cols)
        throw InputError("linear_cka: data size does not match dimensions");

    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Index n = static_cast<Eigen::Index>(x_rows);
    RowMajor xc = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                      x.data(), n, static_cast<Eigen::Index>(x_cols))
                      .cast<double>();
    RowMajor yc = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                      y.data(), n, static_cast<Eigen::Index>(y_cols))
                      .cast<double>();
    xc.rowwise() -= xc.colwise().mean();
    yc.rowwise() -= yc.colwise().mean();

    const double xx = (xc.transpose() * xc).squaredNorm();
    const double yy = (yc.transpose() * yc).squaredNorm();
    if (xx <= 0.0 || yy <= 0.0)
        throw InputError("linear_cka: degenerate (zero-variance) matrix");
    const double xy = (xc.transpose() * yc).squaredNorm();
    return xy / std::sqrt(xx * yy);
}

double js_divergence(const std::vector<double>& p, const std::vector<double>& q, LogBase base) {
    if (p.size() != q.size()) throw InputError("js_divergence: length mismatch");
    // 0*log(0/x) := 0; M dominates both sides so every term is finite.
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) acc += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) acc += 0.5 * q[i] * std::log(q[i] / m);
    }
    if (base == LogBase::Two) acc /= std::log(2.0);
    return acc;
}

double gap_ratio(const GapRatioInputs& in) {
    const double denom = in.gt_image - in.pretrained;
    if (std::abs(denom) <= 1e-9)
        throw InputError("gap_ratio: undefined ratio, |GT - Pretrained| <= 1e-9");
    return (in.tpi - in.pretrained) / denom;
}

int gap_ratio_percent(const GapRatioInputs& in) {
    const double v = gap_ratio(in) * 100.0;
    return static_cast<int>(v >= 0.0 ? std::floor(v + 0.5) : std::ceil(v - 0.5));
}

} // namespace tpi::metrics
