// Acceptance suite: runs every criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code 0 iff all pass.

// Eigen must precede httplib (the socket headers leak macros into it).
#include <Eigen/Dense>

#include "support/mock_endpoint.hpp"
#include "tpi/augment.hpp"
#include "tpi/dataset_io.hpp"
#include "tpi/errors.hpp"
#include "tpi/layout.hpp"
#include "tpi/llm_client.hpp"
#include "tpi/log.hpp"
#include "tpi/metrics.hpp"
#include "tpi/render.hpp"
#include "tpi/util.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace tpi;

namespace {

struct Harness {
    int failures = 0;

    void run(int num, const std::string& name, const std::function<void()>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string error;
        try {
            body();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (error.empty()) {
            std::printf("PASS criterion %d: %s (%.2fs)\n", num, name.c_str(), secs);
        } else {
            std::printf("FAIL criterion %d: %s (%.2fs) -- %s\n", num, name.c_str(), secs,
                        error.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
};

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
    if (!cond) throw CheckFailure(msg);
}

const font::Face& bundled_face() {
    static font::Face face = font::Face::load_bundled("DejaVu Sans", util::find_assets_dir());
    return face;
}

std::vector<render::BatchInput> lorem_corpus(size_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<render::BatchInput> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const size_t words = 50 + util::bounded_rand(rng, 101);
        out.push_back({"synth-" + std::to_string(i), util::lorem_text(rng, words)});
    }
    return out;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               (tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

// ---- criterion 1 ----

void criterion_gap_ratio() {
    struct Row {
        const char* model;
        double pre, tpi, gt;
        int expect_pct;
    };
    const Row rows[] = {
        {"LLaVA 7B", 39.94, 49.97, 55.58, 64},
        {"LLaVA 13B", 43.60, 52.24, 57.65, 61},
        {"Qwen2.5 VL", 69.81, 77.94, 80.04, 79},
        {"LLaMA Vision", 45.64, 72.27, 74.43, 92},
    };
    for (const auto& row : rows) {
        const int pct = metrics::gap_ratio_percent({row.pre, row.tpi, row.gt});
        require(std::abs(pct - row.expect_pct) <= 1,
                std::string(row.model) + ": got " + std::to_string(pct) + "%, expected " +
                    std::to_string(row.expect_pct) + "% (+/-1)");
    }
}

// ---- criteria 2 and 3 (shared corpus and timed runs) ----

struct RenderRuns {
    render::BatchResult single;
    render::BatchResult multi;
};

void criterion_renderer_properties(const std::vector<render::BatchInput>& corpus,
                                   const std::filesystem::path& dir1,
                                   const std::filesystem::path& dir8, RenderRuns& runs) {
    const render::LayoutParams params;
    const auto& face = bundled_face();

    runs.single = render::render_batch(corpus, params, 1, dir1, face);
    runs.multi = render::render_batch(corpus, params, 8, dir8, face);

    require(runs.single.images_written == corpus.size(), "single-worker run incomplete");
    require(runs.multi.images_written == corpus.size(), "multi-worker run incomplete");

    // Byte-identical manifests and images across worker counts.
    require(util::read_file_text(dir1 / "manifest.jsonl") ==
                util::read_file_text(dir8 / "manifest.jsonl"),
            "manifests differ between 1 and 8 workers");
    for (const auto& rec : corpus) {
        if (util::read_file_bytes(dir1 / (rec.id + ".png")) !=
            util::read_file_bytes(dir8 / (rec.id + ".png")))
            throw CheckFailure("image bytes differ for " + rec.id);
    }

    // Row-by-row renderer invariants.
    const auto manifest = io::read_manifest(dir1 / "manifest.jsonl");
    require(manifest.size() == corpus.size(), "manifest row count");
    const int avail_w = params.avail_width();
    const int avail_h = params.avail_height();
    for (size_t i = 0; i < corpus.size(); ++i) {
        const auto& row = manifest[i];
        require(row.id == corpus[i].id, "manifest order broken at " + std::to_string(i));
        const auto layout = render::fit_layout(corpus[i].text, params, face);
        require(layout.chosen_font_size_pt == row.font_size, row.id + ": manifest font size");
        require(static_cast<int>(layout.lines.size()) == row.lines, row.id + ": manifest lines");
        require(layout.truncated == row.truncated, row.id + ": manifest truncated flag");

        // width: both the advance measurement and the rendered ink extent
        for (const auto& line : layout.lines) {
            require(line.advance_px <= avail_w, row.id + ": line advance exceeds width");
            require(std::max(line.advance_px, line.ink_right) + line.pen_shift <= avail_w,
                    row.id + ": ink extent exceeds width");
        }
        // height
        const int n_lines = static_cast<int>(layout.lines.size());
        const int total_h =
            n_lines == 0 ? 0
                         : n_lines * layout.line_height_px + (n_lines - 1) * params.line_spacing_px;
        require(total_h <= avail_h, row.id + ": total height exceeds the padded canvas");
        // maximality
        if (!layout.truncated && layout.chosen_font_size_pt < params.default_font_size_pt) {
            require(!render::layout_fits(corpus[i].text,
                                         layout.chosen_font_size_pt + params.font_size_step_pt,
                                         params, face),
                    row.id + ": a larger size would also fit");
        }
        // content preservation
        require(!layout.truncated, row.id + ": unexpectedly truncated");
        std::string joined;
        for (size_t li = 0; li < layout.lines.size(); ++li) {
            if (li) joined.push_back(' ');
            joined += layout.lines[li].text();
        }
        require(joined == render::normalize_whitespace(corpus[i].text),
                row.id + ": joined lines do not reconstruct the input");
    }
}

void criterion_throughput(const RenderRuns& runs) {
    require(runs.single.images_per_sec >= 25.0,
            "single-worker " + std::to_string(runs.single.images_per_sec) + " img/s < 25");
    require(runs.multi.images_per_sec >= 100.0,
            "8-worker " + std::to_string(runs.multi.images_per_sec) + " img/s < 100");
}

// ---- criterion 4 ----

size_t lcs_bruteforce(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    size_t best = 0;
    for (uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
        std::vector<std::string> sub;
        for (size_t i = 0; i < a.size(); ++i)
            if (mask & (1u << i)) sub.push_back(a[i]);
        size_t j = 0;
        for (const auto& tok : b)
            if (j < sub.size() && tok == sub[j]) ++j;
        if (j == sub.size()) best = std::max(best, sub.size());
    }
    return best;
}

void criterion_rouge_oracle() {
    std::mt19937_64 rng(2024);
    const std::vector<std::string> vocab = {"a", "b", "c", "d"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> a(util::bounded_rand(rng, 9));
        std::vector<std::string> b(util::bounded_rand(rng, 9));
        for (auto& t : a) t = vocab[util::bounded_rand(rng, vocab.size())];
        for (auto& t : b) t = vocab[util::bounded_rand(rng, vocab.size())];
        const size_t lcs = lcs_bruteforce(a, b);
        require(metrics::lcs_length(a, b) == lcs, "LCS mismatch vs brute force");
        double expect = 0.0;
        if (lcs > 0 && !a.empty() && !b.empty()) {
            const double p = static_cast<double>(lcs) / a.size();
            const double r = static_cast<double>(lcs) / b.size();
            expect = 2 * p * r / (p + r);
        }
        require(metrics::rouge_l_f1(a, b) == expect, "F1 differs from oracle value");
    }
}

// ---- criterion 5 ----

void criterion_cka_properties() {
    std::mt19937_64 rng(4096);
    std::normal_distribution<double> gauss(0.0, 1.0);
    using RM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    for (int trial = 0; trial < 50; ++trial) {
        const size_t n = 3 + util::bounded_rand(rng, 48);  // [3,50]
        const size_t dx = 2 + util::bounded_rand(rng, 19); // [2,20]
        const size_t dy = 2 + util::bounded_rand(rng, 19);
        std::vector<float> x(n * dx), y(n * dy);
        for (auto& v : x) v = static_cast<float>(gauss(rng));
        for (auto& v : y) v = static_cast<float>(gauss(rng));

        const double self = metrics::linear_cka(x, n, dx, x, n, dx);
        require(std::abs(self - 1.0) <= 1e-9, "cka(X,X) != 1");

        const double base = metrics::linear_cka(x, n, dx, y, n, dy);
        require(base >= 0.0 && base <= 1.0 + 1e-9, "cka out of range");

        // orthogonal transform of X
        RM xm(n, dx);
        for (size_t i = 0; i < n * dx; ++i)
            xm(static_cast<long>(i / dx), static_cast<long>(i % dx)) = x[i];
        RM g(dx, dx);
        for (long r = 0; r < g.rows(); ++r)
            for (long c = 0; c < g.cols(); ++c) g(r, c) = gauss(rng);
        RM q = Eigen::HouseholderQR<RM>(g).householderQ();
        RM xq = xm * q;
        std::vector<float> xqf(n * dx);
        for (size_t i = 0; i < n * dx; ++i)
            xqf[i] = static_cast<float>(xq(static_cast<long>(i / dx), static_cast<long>(i % dx)));
        require(std::abs(metrics::linear_cka(xqf, n, dx, y, n, dy) - base) <= 1e-6,
                "orthogonal invariance beyond 1e-6");

        // nonzero scalar
        std::vector<float> xs = x;
        for (auto& v : xs) v *= -2.25f;
        require(std::abs(metrics::linear_cka(xs, n, dx, y, n, dy) - base) <= 1e-6,
                "scalar invariance beyond 1e-6");

        // symmetry
        require(std::abs(metrics::linear_cka(y, n, dy, x, n, dx) - base) <= 1e-9,
                "cka symmetry beyond 1e-9");
    }
}

// ---- criterion 6 ----

void criterion_jsd_properties() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    require(metrics::js_divergence({0.25, 0.75}, {0.25, 0.75}) == 0.0, "identity not 0");
    require(std::abs(metrics::js_divergence({1, 0}, {0, 1}) - 1.0) <= 1e-12,
            "disjoint support not 1");
    const double worked = metrics::js_divergence({0.5, 0.5}, {1.0, 0.0});
    require(std::abs(worked - 0.311278) <= 1e-6, "worked value " + std::to_string(worked));

    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p(5), q(5);
        double sp = 0, sq = 0;
        for (int i = 0; i < 5; ++i) {
            p[i] = u(rng) + 1e-6;
            q[i] = u(rng) + 1e-6;
            sp += p[i];
            sq += q[i];
        }
        for (int i = 0; i < 5; ++i) {
            p[i] /= sp;
            q[i] /= sq;
        }
        require(std::abs(metrics::js_divergence(p, q) - metrics::js_divergence(q, p)) <= 1e-12,
                "jsd symmetry beyond 1e-12");
    }
}

// ---- criterion 7 ----

void criterion_augmentation_loop() {
    std::vector<io::VqaRecord> seeds(100);
    for (size_t i = 0; i < seeds.size(); ++i) {
        seeds[i].id = "seed-" + std::to_string(i);
        seeds[i].question = "seed question " + std::to_string(i) + " tok" + std::to_string(i * 3);
        seeds[i].answer = "seed answer " + std::to_string(i);
        seeds[i].description = "seed description " + std::to_string(i);
    }

    struct StubState {
        uint64_t calls = 0;
        std::vector<std::vector<std::string>> demo_ids;
    };

    auto make_stub = [](std::shared_ptr<StubState> state) -> augment::Generator {
        return [state](const std::vector<io::VqaRecord>& demos) {
            std::vector<std::string> ids;
            for (const auto& d : demos) ids.push_back(d.id);
            state->demo_ids.push_back(ids);
            const uint64_t k = state->calls++;
            if (k % 7 == 3) throw IterationFailed("deterministic stub failure");
            if (k % 5 == 1) {
                io::VqaRecord dup = demos[0]; // exact copy of a live pool member
                dup.id.clear();
                return dup;
            }
            io::VqaRecord rec;
            rec.question = "fresh question " + std::to_string(k) + " w" + std::to_string(k * 13);
            rec.answer = "fresh answer " + std::to_string(k);
            rec.description = "fresh description " + std::to_string(k) + " v" +
                              std::to_string(k * 7 + 5);
            return rec;
        };
    };

    augment::SelfInstructOptions opt;
    opt.iterations = 500;
    opt.threshold = 0.70;
    opt.rng_seed = 31337;

    auto state_a = std::make_shared<StubState>();
    const auto pool = augment::run_self_instruct(seeds, make_stub(state_a), opt);

    // stats ledger balances
    require(pool.stats.iterations == 500, "iteration count");
    require(pool.stats.balanced(), "accepted + rejected_duplicate + rejected_invalid != iterations");
    require(pool.stats.rejected_invalid > 0 && pool.stats.rejected_duplicate > 0 &&
                pool.stats.accepted > 0,
            "stub did not exercise all three outcomes");
    require(pool.size() == seeds.size() + pool.stats.accepted, "pool size vs accepted");

    // every request carried exactly 8 distinct demos
    require(state_a->demo_ids.size() == 500, "demo recording incomplete");
    for (const auto& ids : state_a->demo_ids) {
        require(ids.size() == 8, "demo count != 8");
        require(std::set<std::string>(ids.begin(), ids.end()).size() == 8, "demos not distinct");
    }

    // replay: every accepted example scored < threshold at its insertion point
    augment::AugmentationPool replay;
    for (size_t i = 0; i < pool.size(); ++i) {
        const auto& rec = pool.records()[i];
        if (rec.provenance == io::Provenance::Generated) {
            const auto res = augment::dedup_check(pool.canonical_texts()[i], replay, opt.threshold);
            require(res.accept,
                    "replay rejects accepted record at index " + std::to_string(i) +
                        " (max " + std::to_string(res.max_score) + ")");
        }
        replay.add(rec);
    }

    // fixed rng_seed reproduces the identical pool
    auto state_b = std::make_shared<StubState>();
    const auto again = augment::run_self_instruct(seeds, make_stub(state_b), opt);
    require(again.canonical_texts() == pool.canonical_texts(), "rerun pool differs");
    require(state_b->demo_ids == state_a->demo_ids, "rerun demo draws differ");
}

// ---- criterion 8 ----

void criterion_relevance_mock() {
    testing::MockEndpoint server;
    llm::EndpointConfig cfg;
    cfg.base_url = server.base_url();
    cfg.model = "mock";
    cfg.timeout_s = 10;
    cfg.retry_backoff_s = 0.01;
    llm::ChatClient client(cfg, llm::PromptLibrary::load(util::find_assets_dir()));

    // (a) clean yes/no mass -> 0.9
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        testing::MockEndpoint::reply_json(
            res, testing::MockEndpoint::logprob_response(
                     "Yes", {{"Yes", std::log(0.9)}, {"No", std::log(0.1)}}));
    });
    auto r = client.relevance_score("http://img/1.png", "q", "a");
    require(r.method == llm::RelevanceMethod::Logprob, "case a: method");
    require(std::abs(r.score - 0.9) <= 1e-12, "case a: score " + std::to_string(r.score));

    // Appendix A.4 request settings captured verbatim
    const auto body = server.requests().back();
    require(body.at("temperature") == 0, "temperature != 0 in request");
    require(body.at("max_tokens") == 1, "max_tokens != 1 in request");

    // (b) case/whitespace variants aggregate: p_yes = 0.3+0.2, p_no = 0.5
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        testing::MockEndpoint::reply_json(
            res, testing::MockEndpoint::logprob_response("No", {{"Yes", std::log(0.3)},
                                                                {" yes", std::log(0.2)},
                                                                {"No", std::log(0.5)}}));
    });
    r = client.relevance_score("http://img/2.png", "q", "a");
    require(std::abs(r.score - 0.5) <= 1e-12, "case b: score " + std::to_string(r.score));

    // (c) no logprobs -> sampled fallback 1.0
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        testing::MockEndpoint::reply_json(res, testing::MockEndpoint::text_response("Yes"));
    });
    r = client.relevance_score("http://img/3.png", "q", "a");
    require(r.method == llm::RelevanceMethod::SampledFallback, "case c: method");
    require(r.score == 1.0, "case c: score");
}

// ---- criterion 9 ----

void criterion_prompt_fidelity() {
    const auto assets = util::find_assets_dir();
    const char* golden_env = std::getenv("TPI_GOLDEN_DIR");
    require(golden_env != nullptr, "TPI_GOLDEN_DIR not set");
    const std::filesystem::path golden(golden_env);
    const std::pair<const char*, const char*> pairs[] = {
        {"describe_default.txt", "golden_describe_default.txt"},
        {"describe_user.txt", "golden_describe_user.txt"},
        {"augment_system.txt", "golden_augment_system.txt"},
        {"augment_user.txt", "golden_augment_user.txt"},
        {"relevance_system.txt", "golden_relevance_system.txt"},
        {"relevance_user.txt", "golden_relevance_user.txt"},
    };
    for (const auto& [asset, gold] : pairs) {
        const auto a = util::read_file_bytes(assets / "prompts" / asset);
        const auto g = util::read_file_bytes(golden / gold);
        require(a == g, std::string(asset) + " does not byte-match its golden copy");
    }
}

} // namespace

int main() {
    log::set_level(log::Level::Warn);
    Harness harness;

    harness.run(1, "gap-ratio table reproduction", criterion_gap_ratio);

    const auto corpus = lorem_corpus(1000, 20240810);
    TempDir dir1("tpi_accept_w1");
    TempDir dir8("tpi_accept_w8");
    RenderRuns runs;
    harness.run(2, "renderer property suite on 1000 descriptions", [&] {
        criterion_renderer_properties(corpus, dir1.path, dir8.path, runs);
    });
    harness.run(3, "rendering throughput (>=25 single, >=100 with 8 workers)",
                [&] { criterion_throughput(runs); });
    harness.run(4, "ROUGE-L equals the brute-force oracle on 200 pairs", criterion_rouge_oracle);
    harness.run(5, "CKA identity/orthogonal/scalar/symmetry properties", criterion_cka_properties);
    harness.run(6, "JSD identity/disjoint/symmetry and worked value", criterion_jsd_properties);
    harness.run(7, "self-instruct loop ledger, replay, demos, determinism",
                criterion_augmentation_loop);
    harness.run(8, "relevance scoring against scripted logprobs", criterion_relevance_mock);
    harness.run(9, "prompt assets byte-match the golden texts", criterion_prompt_fidelity);

    if (harness.failures > 0) {
        std::printf("%d criterion(s) failed\n", harness.failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
