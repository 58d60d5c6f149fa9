#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tpi::metrics {

// Lowercased maximal runs of word characters. Word characters are ASCII
// alphanumerics plus every codepoint above U+007F; only ASCII letters are
// case-folded. This rule is part of the dedup contract (see docs/formats.md):
// ROUGE-L threshold semantics depend on it.
std::vector<std::string> tokenize(std::string_view text);

// ROUGE-L F1 between two token sequences. LCS via dynamic programming,
// P = LCS/|a|, R = LCS/|b|, F1 = 2PR/(P+R). Zero when LCS is zero or
// either side is empty.
double rouge_l_f1(const std::vector<std::string>& a, const std::vector<std::string>& b);

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Linear CKA between representation matrices (rows = examples).
// Both matrices are column-centered; result is
//   ||Xc' Yc||_F^2 / (||Xc' Xc||_F * ||Yc' Yc||_F)
// Throws InputError on row-count mismatch, n < 2, or a zero-variance matrix.
// Computed in double precision.
double linear_cka(const std::vector<float>& x, size_t x_rows, size_t x_cols,
                  const std::vector<float>& y, size_t y_rows, size_t y_cols);

enum class LogBase { Two, Natural };

// Jensen-Shannon divergence between two normalized distributions of equal
// length. Base-2 logs by default, giving range [0,1].
double js_divergence(const std::vector<double>& p, const std::vector<double>& q,
                     LogBase base = LogBase::Two);

struct GapRatioInputs {
    double pretrained = 0.0;
    double tpi = 0.0;
    double gt_image = 0.0;
};

// (TPI - Pretrained) / (GT - Pretrained). Throws InputError when the
// denominator magnitude is <= 1e-9.
double gap_ratio(const GapRatioInputs& in);

// Gap ratio rounded to integer percent (half away from zero).
int gap_ratio_percent(const GapRatioInputs& in);

} // namespace tpi::metrics
