#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tpi/errors.hpp"
#include "tpi/metrics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

using namespace tpi;

namespace {

// Independent LCS oracle: enumerate every subsequence of `a` (|a| <= 8)
// and keep the longest one that is also a subsequence of `b`.
size_t lcs_bruteforce(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    REQUIRE(a.size() <= 16);
    size_t best = 0;
    for (uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
        std::vector<std::string> sub;
        for (size_t i = 0; i < a.size(); ++i)
            if (mask & (1u << i)) sub.push_back(a[i]);
        size_t j = 0;
        for (const auto& tok : b) {
            if (j < sub.size() && tok == sub[j]) ++j;
        }
        if (j == sub.size()) best = std::max(best, sub.size());
    }
    return best;
}

std::vector<std::string> random_tokens(std::mt19937_64& rng, size_t max_len) {
    static const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
    std::uniform_int_distribution<size_t> len_dist(0, max_len);
    std::uniform_int_distribution<size_t> tok_dist(0, vocab.size() - 1);
    std::vector<std::string> out(len_dist(rng));
    for (auto& t : out) t = vocab[tok_dist(rng)];
    return out;
}

std::vector<float> random_matrix(std::mt19937_64& rng, size_t n, size_t d) {
    std::normal_distribution<float> dist(0.f, 1.f);
    std::vector<float> out(n * d);
    for (auto& v : out) v = dist(rng);
    return out;
}

} // namespace

TEST_CASE("tokenize lowercases alphanumeric runs") {
    CHECK(metrics::tokenize("The cat, sat!") == std::vector<std::string>{"the", "cat", "sat"});
    CHECK(metrics::tokenize("").empty());
    CHECK(metrics::tokenize("a1 b2") == std::vector<std::string>{"a1", "b2"});
    CHECK(metrics::tokenize("x--y") == std::vector<std::string>{"x", "y"});
}

TEST_CASE("rouge_l_f1 basics") {
    const auto a = metrics::tokenize("the cat sat");
    CHECK(metrics::rouge_l_f1(a, a) == doctest::Approx(1.0));
    CHECK(metrics::rouge_l_f1(a, metrics::tokenize("dog runs fast")) == 0.0);
    CHECK(metrics::rouge_l_f1({}, {}) == 0.0);
    CHECK(metrics::rouge_l_f1(a, {}) == 0.0);

    // LCS("the cat sat", "the cat ran") = 2, P = R = 2/3, F1 = 2/3
    const auto b = metrics::tokenize("the cat ran");
    CHECK(metrics::lcs_length(a, b) == 2);
    CHECK(metrics::rouge_l_f1(a, b) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("rouge_l_f1 agrees with the brute-force oracle and is symmetric") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const auto a = random_tokens(rng, 8);
        const auto b = random_tokens(rng, 8);
        const size_t lcs = lcs_bruteforce(a, b);
        CHECK(metrics::lcs_length(a, b) == lcs);
        double expect = 0.0;
        if (lcs > 0) {
            const double p = static_cast<double>(lcs) / a.size();
            const double r = static_cast<double>(lcs) / b.size();
            expect = 2 * p * r / (p + r);
        }
        CHECK(metrics::rouge_l_f1(a, b) == expect);
        CHECK(metrics::rouge_l_f1(a, b) == metrics::rouge_l_f1(b, a));
    }
}

TEST_CASE("linear_cka identity and scale invariance") {
    std::mt19937_64 rng(11);
    const auto x = random_matrix(rng, 10, 4);
    CHECK(metrics::linear_cka(x, 10, 4, x, 10, 4) == doctest::Approx(1.0).epsilon(1e-9));

    // Y = 2X on the hand-checked 3x2 example
    std::vector<float> x3 = {1, 0, 0, 1, 1, 1};
    std::vector<float> y3 = {2, 0, 0, 2, 2, 2};
    CHECK(metrics::linear_cka(x3, 3, 2, y3, 3, 2) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("linear_cka orthogonal invariance and symmetry") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const size_t n = 8, d = 5;
        const auto xf = random_matrix(rng, n, d);
        const auto yf = random_matrix(rng, n, 3);

        using RM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        RM x(n, d);
        for (size_t i = 0; i < n * d; ++i) x(static_cast<long>(i / d), static_cast<long>(i % d)) = xf[i];
        RM g = RM::Random(d, d);
        Eigen::HouseholderQR<RM> qr(g);
        RM q = qr.householderQ();
        RM xq = x * q;
        std::vector<float> xqf(n * d);
        for (size_t i = 0; i < n * d; ++i)
            xqf[i] = static_cast<float>(xq(static_cast<long>(i / d), static_cast<long>(i % d)));

        const double base = metrics::linear_cka(xf, n, d, yf, n, 3);
        CHECK(metrics::linear_cka(xqf, n, d, yf, n, 3) == doctest::Approx(base).epsilon(1e-5));
        // nonzero scalar
        auto xs = xf;
        for (auto& v : xs) v *= -3.5f;
        CHECK(metrics::linear_cka(xs, n, d, yf, n, 3) == doctest::Approx(base).epsilon(1e-6));
        // symmetry
        CHECK(metrics::linear_cka(yf, n, 3, xf, n, d) == doctest::Approx(base).epsilon(1e-9));
        CHECK(base >= 0.0);
        CHECK(base <= 1.0 + 1e-9);
    }
}

TEST_CASE("linear_cka rejects bad inputs") {
    std::mt19937_64 rng(17);
    const auto x = random_matrix(rng, 4, 3);
    const auto y = random_matrix(rng, 5, 3);
    CHECK_THROWS_AS(metrics::linear_cka(x, 4, 3, y, 5, 3), InputError);
    std::vector<float> constant(4 * 2, 1.f);
    CHECK_THROWS_AS(metrics::linear_cka(constant, 4, 2, x, 4, 3), InputError);
    CHECK_THROWS_AS(metrics::linear_cka(x, 1, 12, x, 1, 12), InputError);
}

TEST_CASE("js_divergence worked values") {
    const std::vector<double> p = {0.5, 0.5};
    const std::vector<double> q = {1.0, 0.0};
    CHECK(metrics::js_divergence(p, p) == 0.0);
    CHECK(metrics::js_divergence({1, 0}, {0, 1}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(metrics::js_divergence(p, q) == doctest::Approx(0.311278).epsilon(1e-6));
    CHECK(metrics::js_divergence(p, q) == metrics::js_divergence(q, p));
    CHECK_THROWS_AS(metrics::js_divergence(p, {0.2, 0.3, 0.5}), InputError);
}

TEST_CASE("js_divergence is monotone under mixing") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> p(4), q(4);
        double sp = 0, sq = 0;
        for (int i = 0; i < 4; ++i) {
            p[i] = u(rng);
            q[i] = u(rng);
            sp += p[i];
            sq += q[i];
        }
        for (int i = 0; i < 4; ++i) {
            p[i] /= sp;
            q[i] /= sq;
        }
        double prev = 0.0;
        for (double t = 0.0; t <= 1.0001; t += 0.1) {
            std::vector<double> mix(4);
            for (int i = 0; i < 4; ++i) mix[i] = (1 - t) * p[i] + t * q[i];
            const double v = metrics::js_divergence(p, mix);
            CHECK(v >= prev - 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("gap_ratio reproduces the reported percentages") {
    CHECK(metrics::gap_ratio_percent({39.94, 49.97, 55.58}) == 64);
    CHECK(metrics::gap_ratio_percent({69.81, 77.94, 80.04}) == 79);
    CHECK(metrics::gap_ratio({10, 20, 20}) == doctest::Approx(1.0));
    CHECK(metrics::gap_ratio_percent({10, 20, 20}) == 100);
    CHECK_THROWS_AS(metrics::gap_ratio({10, 15, 10}), InputError);
}

TEST_CASE("gap_ratio is affine invariant") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int trial = 0; trial < 50; ++trial) {
        metrics::GapRatioInputs in{u(rng), u(rng), u(rng)};
        if (std::abs(in.gt_image - in.pretrained) < 1e-3) continue;
        const double alpha = u(rng) >= 0 ? 2.5 : -1.25;
        const double beta = u(rng);
        metrics::GapRatioInputs mapped{alpha * in.pretrained + beta, alpha * in.tpi + beta,
                                       alpha * in.gt_image + beta};
        CHECK(metrics::gap_ratio(mapped) == doctest::Approx(metrics::gap_ratio(in)).epsilon(1e-9));
    }
}
