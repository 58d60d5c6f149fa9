#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace tpi::io {

enum class Provenance { Seed, Generated };

const char* provenance_name(Provenance p);
Provenance parse_provenance(const std::string& name);

// One dataset row: the (description, question, answer) triplet, optionally
// with a ground-truth image path used only for description generation and
// relevance scoring.
struct VqaRecord {
    std::string id;
    std::string question;
    std::string answer;
    std::string description;
    std::optional<std::string> image_path;
    Provenance provenance = Provenance::Seed;
    // Fields we do not model, preserved verbatim for round-trips.
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

// Input schema: {"id": str, "question": str, "answer": str,
//                "description": str?, "image": str?}.
// Errors name the 1-based line number. Duplicate ids are rejected.
std::vector<VqaRecord> read_vqa_jsonl(const std::filesystem::path& path);

void write_vqa_jsonl(const std::vector<VqaRecord>& records, const std::filesystem::path& path);

nlohmann::ordered_json vqa_record_to_json(const VqaRecord& rec);
VqaRecord vqa_record_from_json(const nlohmann::ordered_json& row);

struct ManifestRow {
    std::string id;
    std::string image; // relative path under the render output dir
    int font_size = 0;
    int lines = 0;
    bool truncated = false;
    int missing_glyphs = 0;
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path);
std::string manifest_row_to_line(const ManifestRow& row);

struct TrainingSetSummary {
    size_t rows = 0;
};

// Emits conversation rows:
//   {"id", "image", "conversations": [{"role":"user","content":"<image>\n" + question},
//                                     {"role":"assistant","content": answer}]}
// Every record id must appear in the manifest; missing ids are listed in the error.
TrainingSetSummary write_training_set(const std::vector<VqaRecord>& records,
                                      const std::vector<ManifestRow>& manifest,
                                      const std::filesystem::path& out_path);

// Dense row-major matrix, rows = examples, cols = feature dims.
struct FeatureMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<float> data;

    float at(size_t r, size_t c) const { return data[r * cols + c]; }
};

// "TPIM" binary format: magic "TPIM", u32 LE rows, u32 LE cols, then
// rows*cols IEEE-754 float32 LE, row-major. read_matrix also accepts CSV
// (optional header line, comma-separated floats). Non-finite values are
// rejected on both paths.
FeatureMatrix read_matrix(const std::filesystem::path& path);
void write_matrix(const FeatureMatrix& m, const std::filesystem::path& path);

// Probability vector. Loading normalizes when |sum-1| <= 1e-6 and rejects
// anything further off. Stored as a JSON array of numbers.
struct Distribution {
    std::vector<double> probs;
};

Distribution read_distribution(const std::filesystem::path& path);
void write_distribution(const Distribution& d, const std::filesystem::path& path);

} // namespace tpi::io
