#include "tpi/dataset_io.hpp"
#include "tpi/errors.hpp"
#include "tpi/util.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace tpi::io {

namespace {

using nlohmann::ordered_json;

ordered_json parse_json_line(const std::string& line, const std::filesystem::path& path,
                             size_t line_no) {
    ordered_json row = ordered_json::parse(line, nullptr, false);
    if (row.is_discarded())
        throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON");
    if (!row.is_object())
        throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected a JSON object");
    return row;
}

std::string require_string(const ordered_json& row, const char* key,
                           const std::filesystem::path& path, size_t line_no) {
    auto it = row.find(key);
    if (it == row.end() || !it->is_string())
        throw InputError(path.string() + ":" + std::to_string(line_no) +
                         ": missing or non-string field \"" + key + "\"");
    return it->get<std::string>();
}

// Each line is parsed independently; blank lines are skipped.
template <typename Fn>
void for_each_jsonl_row(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open file: " + path.string());
    std::string line;
    size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        fn(parse_json_line(line, path, line_no), line_no);
    }
}

void put_le32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

uint32_t get_le32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

bool looks_like_csv(const std::filesystem::path& path) {
    auto ext = util::lowercase_ascii(path.extension().string());
    return ext == ".csv";
}

FeatureMatrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open file: " + path.string());
    FeatureMatrix m;
    std::string line;
    size_t line_no = 0;
    bool header_checked = false;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<float> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                size_t pos = 0;
                float v = std::stof(util::trim(cell), &pos);
                row.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            // A single leading non-numeric line is treated as a header.
            if (!header_checked && m.rows == 0) {
                header_checked = true;
                continue;
            }
            throw InputError(path.string() + ":" + std::to_string(line_no) +
                             ": non-numeric CSV cell");
        }
        header_checked = true;
        if (m.rows == 0) {
            m.cols = row.size();
        } else if (row.size() != m.cols) {
            throw InputError(path.string() + ":" + std::to_string(line_no) +
                             ": ragged CSV row (expected " + std::to_string(m.cols) + " cells)");
        }
        m.data.insert(m.data.end(), row.begin(), row.end());
        ++m.rows;
    }
    for (float v : m.data)
        if (!std::isfinite(v)) throw InputError(path.string() + ": non-finite value in matrix");
    return m;
}

} // namespace

const char* provenance_name(Provenance p) {
    return p == Provenance::Seed ? "seed" : "generated";
}

Provenance parse_provenance(const std::string& name) {
    if (name == "seed") return Provenance::Seed;
    if (name == "generated") return Provenance::Generated;
    throw InputError("unknown provenance: " + name);
}

ordered_json vqa_record_to_json(const VqaRecord& rec) {
    ordered_json row;
    row["id"] = rec.id;
    row["question"] = rec.question;
    row["answer"] = rec.answer;
    row["description"] = rec.description;
    if (rec.image_path) row["image"] = *rec.image_path;
    if (rec.provenance != Provenance::Seed) row["provenance"] = provenance_name(rec.provenance);
    for (const auto& [k, v] : rec.extra.items()) row[k] = v;
    return row;
}

VqaRecord vqa_record_from_json(const ordered_json& row) {
    VqaRecord rec;
    rec.id = row.at("id").get<std::string>();
    rec.question = row.at("question").get<std::string>();
    rec.answer = row.at("answer").get<std::string>();
    if (auto it = row.find("description"); it != row.end() && it->is_string())
        rec.description = it->get<std::string>();
    if (auto it = row.find("image"); it != row.end() && it->is_string())
        rec.image_path = it->get<std::string>();
    if (auto it = row.find("provenance"); it != row.end() && it->is_string())
        rec.provenance = parse_provenance(it->get<std::string>());
    for (const auto& [k, v] : row.items()) {
        if (k == "id" || k == "question" || k == "answer" || k == "description" ||
            k == "image" || k == "provenance")
            continue;
        rec.extra[k] = v;
    }
    return rec;
}

std::vector<VqaRecord> read_vqa_jsonl(const std::filesystem::path& path) {
    std::vector<VqaRecord> out;
    std::unordered_set<std::string> ids;
    for_each_jsonl_row(path, [&](const ordered_json& row, size_t line_no) {
        VqaRecord rec;
        rec.id = require_string(row, "id", path, line_no);
        rec.question = require_string(row, "question", path, line_no);
        rec.answer = require_string(row, "answer", path, line_no);
        if (rec.id.empty())
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": empty id");
        if (!ids.insert(rec.id).second)
            throw InputError(path.string() + ":" + std::to_string(line_no) +
                             ": duplicate id \"" + rec.id + "\"");
        if (auto it = row.find("description"); it != row.end() && it->is_string())
            rec.description = it->get<std::string>();
        if (auto it = row.find("image"); it != row.end() && it->is_string())
            rec.image_path = it->get<std::string>();
        if (auto it = row.find("provenance"); it != row.end() && it->is_string())
            rec.provenance = parse_provenance(it->get<std::string>());
        for (const auto& [k, v] : row.items()) {
            if (k == "id" || k == "question" || k == "answer" || k == "description" ||
                k == "image" || k == "provenance")
                continue;
            rec.extra[k] = v;
        }
        out.push_back(std::move(rec));
    });
    return out;
}

void write_vqa_jsonl(const std::vector<VqaRecord>& records, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw InputError("cannot open file for writing: " + path.string());
    for (const auto& rec : records) f << vqa_record_to_json(rec).dump() << '\n';
    if (!f) throw InputError("write failed: " + path.string());
}

std::string manifest_row_to_line(const ManifestRow& row) {
    ordered_json j;
    j["id"] = row.id;
    j["image"] = row.image;
    j["font_size"] = row.font_size;
    j["lines"] = row.lines;
    j["truncated"] = row.truncated;
    j["missing_glyphs"] = row.missing_glyphs;
    return j.dump();
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
    std::vector<ManifestRow> out;
    for_each_jsonl_row(path, [&](const ordered_json& row, size_t line_no) {
        ManifestRow r;
        r.id = require_string(row, "id", path, line_no);
        r.image = require_string(row, "image", path, line_no);
        r.font_size = row.at("font_size").get<int>();
        r.lines = row.at("lines").get<int>();
        r.truncated = row.at("truncated").get<bool>();
        r.missing_glyphs = row.at("missing_glyphs").get<int>();
        out.push_back(std::move(r));
    });
    return out;
}

void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw InputError("cannot open file for writing: " + path.string());
    for (const auto& row : rows) f << manifest_row_to_line(row) << '\n';
    if (!f) throw InputError("write failed: " + path.string());
}

TrainingSetSummary write_training_set(const std::vector<VqaRecord>& records,
                                      const std::vector<ManifestRow>& manifest,
                                      const std::filesystem::path& out_path) {
    std::unordered_map<std::string, const ManifestRow*> by_id;
    for (const auto& row : manifest) by_id.emplace(row.id, &row);

    std::vector<std::string> missing;
    for (const auto& rec : records)
        if (!by_id.count(rec.id)) missing.push_back(rec.id);
    if (!missing.empty()) {
        std::string msg = "records missing from manifest:";
        for (const auto& id : missing) msg += " " + id;
        throw InputError(msg);
    }

    std::ofstream f(out_path, std::ios::trunc);
    if (!f) throw InputError("cannot open file for writing: " + out_path.string());
    TrainingSetSummary summary;
    for (const auto& rec : records) {
        ordered_json row;
        row["id"] = rec.id;
        row["image"] = by_id.at(rec.id)->image;
        row["conversations"] = ordered_json::array(
            {{{"role", "user"}, {"content", "<image>\n" + rec.question}},
             {{"role", "assistant"}, {"content", rec.answer}}});
        f << row.dump() << '\n';
        ++summary.rows;
    }
    if (!f) throw InputError("write failed: " + out_path.string());
    return summary;
}

void write_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
    if (m.data.size() != m.rows * m.cols)
        throw InputError("write_matrix: data size does not match dimensions");
    for (float v : m.data)
        if (!std::isfinite(v)) throw InputError("write_matrix: non-finite value");
    std::string out;
    out.reserve(12 + m.data.size() * 4);
    out += "TPIM";
    put_le32(out, static_cast<uint32_t>(m.rows));
    put_le32(out, static_cast<uint32_t>(m.cols));
    for (float v : m.data) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_le32(out, bits);
    }
    util::write_file_bytes(path, out.data(), out.size());
}

FeatureMatrix read_matrix(const std::filesystem::path& path) {
    if (looks_like_csv(path)) return read_matrix_csv(path);
    auto bytes = util::read_file_bytes(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "TPIM", 4) != 0) {
        // Not the binary format; fall back to CSV for plain numeric files.
        if (!bytes.empty() && bytes[0] != 'T') return read_matrix_csv(path);
        throw InputError(path.string() + ": bad magic, expected \"TPIM\"");
    }
    FeatureMatrix m;
    m.rows = get_le32(bytes.data() + 4);
    m.cols = get_le32(bytes.data() + 8);
    const size_t expect = 12 + static_cast<size_t>(m.rows) * m.cols * 4;
    if (bytes.size() != expect)
        throw InputError(path.string() + ": payload size " + std::to_string(bytes.size() - 12) +
                         " bytes does not match header " + std::to_string(m.rows) + "x" +
                         std::to_string(m.cols));
    m.data.resize(static_cast<size_t>(m.rows) * m.cols);
    for (size_t i = 0; i < m.data.size(); ++i) {
        uint32_t bits = get_le32(bytes.data() + 12 + i * 4);
        float v;
        std::memcpy(&v, &bits, 4);
        if (!std::isfinite(v))
            throw InputError(path.string() + ": non-finite value at index " + std::to_string(i));
        m.data[i] = v;
    }
    return m;
}

Distribution read_distribution(const std::filesystem::path& path) {
    auto text = util::read_file_text(path);
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_array())
        throw InputError(path.string() + ": expected a JSON array of numbers");
    Distribution d;
    d.probs.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw InputError(path.string() + ": non-numeric entry");
        double x = v.get<double>();
        if (!std::isfinite(x) || x < 0.0)
            throw InputError(path.string() + ": probabilities must be finite and nonnegative");
        d.probs.push_back(x);
    }
    double sum = 0.0;
    for (double x : d.probs) sum += x;
    if (std::abs(sum - 1.0) > 1e-6)
        throw InputError(path.string() + ": probabilities sum to " + std::to_string(sum) +
                         ", more than 1e-6 away from 1");
    if (sum > 0.0)
        for (double& x : d.probs) x /= sum;
    return d;
}

void write_distribution(const Distribution& d, const std::filesystem::path& path) {
    nlohmann::json j = d.probs;
    auto text = j.dump();
    util::write_file_bytes(path, text.data(), text.size());
}

} // namespace tpi::io
