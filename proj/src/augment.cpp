#include "tpi/augment.hpp"
#include "tpi/errors.hpp"
#include "tpi/log.hpp"
#include "tpi/metrics.hpp"
#include "tpi/util.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace tpi::augment {

std::string canonicalize(const io::VqaRecord& rec) {
    return "question: " + rec.question + "\nanswer: " + rec.answer +
           "\ndescription: " + rec.description;
}

void AugmentationPool::add(io::VqaRecord rec) {
    std::string canonical = canonicalize(rec);
    canonical_tokens_.push_back(metrics::tokenize(canonical));
    canonical_texts_.push_back(std::move(canonical));
    records_.push_back(std::move(rec));
}

DedupResult dedup_check(const std::string& candidate_canonical, const AugmentationPool& pool,
                        double threshold, unsigned workers) {
    DedupResult res;
    if (pool.size() == 0) return res;
    if (threshold <= 0.0 || threshold > 1.0)
        throw ConfigError("dedup threshold must be in (0,1]");

    const auto cand_tokens = metrics::tokenize(candidate_canonical);
    const auto& pool_tokens = pool.canonical_tokens();

    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    const size_t n = pool.size();
    // Below ~256 comparisons threading overhead dominates.
    if (workers <= 1 || n < 256) {
        for (size_t i = 0; i < n; ++i) {
            const double score = metrics::rouge_l_f1(cand_tokens, pool_tokens[i]);
            if (score > res.max_score) {
                res.max_score = score;
                res.argmax_index = i;
            }
        }
    } else {
        const unsigned t_count = std::min<unsigned>(workers, 8);
        std::vector<double> best(t_count, 0.0);
        std::vector<size_t> best_idx(t_count, 0);
        util::parallel_for(t_count, t_count, [&](size_t t) {
            for (size_t i = t; i < n; i += t_count) {
                const double score = metrics::rouge_l_f1(cand_tokens, pool_tokens[i]);
                if (score > best[t]) {
                    best[t] = score;
                    best_idx[t] = i;
                }
            }
        });
        for (unsigned t = 0; t < t_count; ++t) {
            // Tie-break toward the earliest pool index for determinism.
            if (best[t] > res.max_score ||
                (best[t] == res.max_score && best[t] > 0.0 && best_idx[t] < res.argmax_index)) {
                res.max_score = best[t];
                res.argmax_index = best_idx[t];
            }
        }
    }
    res.accept = res.max_score < threshold;
    return res;
}

const char* dedup_mode_name(DedupMode m) {
    return m == DedupMode::Online ? "online" : "batch_filter";
}

DedupMode parse_dedup_mode(const std::string& name) {
    if (name == "online") return DedupMode::Online;
    if (name == "batch_filter" || name == "batch-filter") return DedupMode::BatchFilter;
    throw ConfigError("unknown dedup mode: " + name + " (expected online|batch_filter)");
}

namespace {

struct LoopState {
    AugmentationPool pool;
    std::mt19937_64 rng;
    SelfInstructOptions options;
    uint64_t next_gen_id = 0;
};

std::filesystem::path stats_sidecar(const std::filesystem::path& pool_path) {
    return pool_path.string() + ".stats.json";
}

void write_checkpoint(const LoopState& st) {
    if (st.options.checkpoint_path.empty()) return;
    write_pool_snapshot(st.pool, st.options.checkpoint_path);
    std::ostringstream rng_text;
    rng_text << st.rng;
    nlohmann::ordered_json stats{
        {"iterations", st.pool.stats.iterations},
        {"accepted", st.pool.stats.accepted},
        {"rejected_duplicate", st.pool.stats.rejected_duplicate},
        {"rejected_invalid", st.pool.stats.rejected_invalid},
        {"target_iterations", st.options.iterations},
        {"threshold", st.options.threshold},
        {"rng_seed", st.options.rng_seed},
        {"mode", dedup_mode_name(st.options.mode)},
        {"next_gen_id", st.next_gen_id},
        {"rng_state", rng_text.str()},
    };
    const auto text = stats.dump(2);
    util::write_file_bytes(stats_sidecar(st.options.checkpoint_path), text.data(), text.size());
}

void run_iterations(LoopState& st, const Generator& gen) {
    auto& pool = st.pool;
    const auto& opt = st.options;
    while (pool.stats.iterations < opt.iterations) {
        ++pool.stats.iterations;
        const auto indices = util::sample_distinct(st.rng, pool.size(), 8);
        std::vector<io::VqaRecord> demos;
        demos.reserve(8);
        for (size_t idx : indices) demos.push_back(pool.records()[idx]);

        io::VqaRecord candidate;
        try {
            candidate = gen(demos);
        } catch (const IterationFailed& e) {
            ++pool.stats.rejected_invalid;
            log::debug("iteration failed", {{"reason", e.what()}});
            continue;
        } catch (const TransportError& e) {
            ++pool.stats.rejected_invalid;
            log::warn("transport error, iteration counted as invalid", {{"reason", e.what()}});
            continue;
        }
        candidate.provenance = io::Provenance::Generated;
        candidate.id = "gen-" + std::to_string(st.next_gen_id++);

        if (opt.mode == DedupMode::Online) {
            const auto dedup =
                dedup_check(canonicalize(candidate), pool, opt.threshold, opt.dedup_workers);
            if (dedup.accept) {
                pool.add(std::move(candidate));
                ++pool.stats.accepted;
            } else {
                ++pool.stats.rejected_duplicate;
            }
        } else {
            // Batch mode: everything joins the pool now, filtering happens at the end.
            pool.add(std::move(candidate));
            ++pool.stats.accepted;
        }

        if (!opt.checkpoint_path.empty() && opt.checkpoint_interval > 0 &&
            pool.stats.iterations % opt.checkpoint_interval == 0)
            write_checkpoint(st);
        if (pool.stats.iterations % 100 == 0)
            log::info("augmentation progress",
                      {{"iterations", std::to_string(pool.stats.iterations)},
                       {"accepted", std::to_string(pool.stats.accepted)},
                       {"pool", std::to_string(pool.size())}});
    }

    if (opt.mode == DedupMode::BatchFilter) {
        // Replay the pool in insertion order, filtering generated records
        // against everything kept so far.
        AugmentationPool filtered;
        filtered.stats = pool.stats;
        filtered.stats.accepted = 0;
        filtered.stats.rejected_duplicate = 0;
        for (size_t i = 0; i < pool.size(); ++i) {
            const auto& rec = pool.records()[i];
            if (rec.provenance == io::Provenance::Seed) {
                filtered.add(rec);
                continue;
            }
            const auto dedup = dedup_check(pool.canonical_texts()[i], filtered, opt.threshold,
                                           opt.dedup_workers);
            if (dedup.accept) {
                filtered.add(rec);
                ++filtered.stats.accepted;
            } else {
                ++filtered.stats.rejected_duplicate;
            }
        }
        pool = std::move(filtered);
    }

    write_checkpoint(st);
}

} // namespace

AugmentationPool run_self_instruct(const std::vector<io::VqaRecord>& seeds, const Generator& gen,
                                   const SelfInstructOptions& options) {
    if (seeds.size() < 8)
        throw InputError("self-instruct needs at least 8 seed records, got " +
                         std::to_string(seeds.size()));
    if (options.threshold <= 0.0 || options.threshold > 1.0)
        throw ConfigError("dedup threshold must be in (0,1]");

    LoopState st;
    st.options = options;
    st.rng.seed(options.rng_seed);
    for (const auto& seed : seeds) {
        io::VqaRecord rec = seed;
        rec.provenance = io::Provenance::Seed;
        st.pool.add(std::move(rec));
    }
    run_iterations(st, gen);
    return std::move(st.pool);
}

AugmentationPool resume_self_instruct(const std::filesystem::path& checkpoint_path,
                                      const Generator& gen) {
    LoopState st;
    st.pool = read_pool_snapshot(checkpoint_path);

    const auto stats_text = util::read_file_text(stats_sidecar(checkpoint_path));
    auto stats = nlohmann::json::parse(stats_text, nullptr, false);
    if (stats.is_discarded())
        throw InputError("bad checkpoint sidecar: " + stats_sidecar(checkpoint_path).string());
    st.pool.stats.iterations = stats.at("iterations").get<uint64_t>();
    st.pool.stats.accepted = stats.at("accepted").get<uint64_t>();
    st.pool.stats.rejected_duplicate = stats.at("rejected_duplicate").get<uint64_t>();
    st.pool.stats.rejected_invalid = stats.at("rejected_invalid").get<uint64_t>();
    st.options.iterations = stats.at("target_iterations").get<uint64_t>();
    st.options.threshold = stats.at("threshold").get<double>();
    st.options.rng_seed = stats.at("rng_seed").get<uint64_t>();
    st.options.mode = parse_dedup_mode(stats.at("mode").get<std::string>());
    st.options.checkpoint_path = checkpoint_path;
    st.next_gen_id = stats.at("next_gen_id").get<uint64_t>();
    std::istringstream rng_text(stats.at("rng_state").get<std::string>());
    rng_text >> st.rng;

    run_iterations(st, gen);
    return std::move(st.pool);
}

void write_pool_snapshot(const AugmentationPool& pool, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw InputError("cannot open file for writing: " + path.string());
    for (size_t i = 0; i < pool.size(); ++i) {
        auto row = io::vqa_record_to_json(pool.records()[i]);
        row["provenance"] = io::provenance_name(pool.records()[i].provenance);
        row["canonical"] = pool.canonical_texts()[i];
        f << row.dump() << '\n';
    }
    if (!f) throw InputError("write failed: " + path.string());
}

AugmentationPool read_pool_snapshot(const std::filesystem::path& path) {
    AugmentationPool pool;
    std::ifstream f(path);
    if (!f) throw InputError("cannot open file: " + path.string());
    std::string line;
    size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto row = nlohmann::ordered_json::parse(line, nullptr, false);
        if (row.is_discarded())
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON");
        row.erase("canonical"); // recomputed by add()
        pool.add(io::vqa_record_from_json(row));
    }
    return pool;
}

} // namespace tpi::augment
