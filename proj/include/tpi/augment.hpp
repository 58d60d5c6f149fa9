#pragma once

#include "tpi/dataset_io.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace tpi::augment {

// "question: {q}\nanswer: {a}\ndescription: {d}" -- the string ROUGE-L
// dedup operates on.
std::string canonicalize(const io::VqaRecord& rec);

struct PoolStats {
    uint64_t iterations = 0;
    uint64_t accepted = 0;
    uint64_t rejected_duplicate = 0;
    uint64_t rejected_invalid = 0;

    bool balanced() const {
        return accepted + rejected_duplicate + rejected_invalid == iterations;
    }
};

// Ordered pool of records with cached canonical strings and token lists.
class AugmentationPool {
public:
    void add(io::VqaRecord rec);

    size_t size() const { return records_.size(); }
    const std::vector<io::VqaRecord>& records() const { return records_; }
    const std::vector<std::string>& canonical_texts() const { return canonical_texts_; }
    const std::vector<std::vector<std::string>>& canonical_tokens() const {
        return canonical_tokens_;
    }

    PoolStats stats;

private:
    std::vector<io::VqaRecord> records_;
    std::vector<std::string> canonical_texts_;
    std::vector<std::vector<std::string>> canonical_tokens_;
};

struct DedupResult {
    bool accept = true;
    double max_score = 0.0;
    size_t argmax_index = 0; // valid when max_score > 0
};

// Max ROUGE-L F1 of the candidate against every pool member; reject iff
// max >= threshold. Scans are data-parallel (workers = 0 picks the
// hardware count).
DedupResult dedup_check(const std::string& candidate_canonical, const AugmentationPool& pool,
                        double threshold, unsigned workers = 0);

// Produces one candidate from 8 demonstrations. Throwing IterationFailed
// or TransportError marks the iteration rejected_invalid and the loop
// continues.
using Generator = std::function<io::VqaRecord(const std::vector<io::VqaRecord>& demos)>;

enum class DedupMode { Online, BatchFilter };

struct SelfInstructOptions {
    uint64_t iterations = 10000;
    double threshold = 0.70;
    uint64_t rng_seed = 0;
    DedupMode mode = DedupMode::Online;
    std::filesystem::path checkpoint_path; // empty disables checkpointing
    uint64_t checkpoint_interval = 100;
    unsigned dedup_workers = 0;
};

const char* dedup_mode_name(DedupMode m);
DedupMode parse_dedup_mode(const std::string& name);

// The generation loop: each iteration draws 8 distinct demos uniformly
// from the current pool (seeded RNG), asks the generator for one new
// example, canonicalizes it and applies the dedup policy. Seeds must be
// at least 8 records. Returns the final pool (seeds + accepted examples).
AugmentationPool run_self_instruct(const std::vector<io::VqaRecord>& seeds, const Generator& gen,
                                   const SelfInstructOptions& options);

// Continues an interrupted run from its checkpoint (pool snapshot + stats
// sidecar, including the RNG state).
AugmentationPool resume_self_instruct(const std::filesystem::path& checkpoint_path,
                                      const Generator& gen);

// Snapshot I/O: pool rows are VqaRecord JSON plus {"provenance","canonical"};
// the sidecar <path>.stats.json carries counters, settings and RNG state.
void write_pool_snapshot(const AugmentationPool& pool, const std::filesystem::path& path);
AugmentationPool read_pool_snapshot(const std::filesystem::path& path);

} // namespace tpi::augment
