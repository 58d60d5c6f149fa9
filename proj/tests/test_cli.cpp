#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// End-to-end checks of the tpi binary (path from TPI_BIN).

#include "tpi/util.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <json.hpp>

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout only
};

RunResult run_cli(const std::string& args) {
    const char* bin = std::getenv("TPI_BIN");
    REQUIRE(bin != nullptr);
    const std::string cmd = std::string(bin) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult res;
    std::array<char, 4096> buf;
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) res.output.append(buf.data(), n);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("tpi_cli_test_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace

TEST_CASE("analyze gap-ratio prints the rounded percent") {
    const auto res = run_cli("analyze gap-ratio --pre 39.94 --tpi 49.97 --gt 55.58");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("64%") != std::string::npos);
    auto line_end = res.output.find('\n');
    const auto report = nlohmann::json::parse(res.output.substr(0, line_end));
    CHECK(report["metric"] == "gap_ratio");
    CHECK(report["percent"] == 64);
}

TEST_CASE("analyze jsd evaluates distribution files") {
    TempDir tmp;
    const std::string p_json = "[0.5,0.5]";
    tpi::util::write_file_bytes(tmp.path / "p.json", p_json.data(), p_json.size());
    const std::string q_json = "[1.0,0.0]";
    tpi::util::write_file_bytes(tmp.path / "q.json", q_json.data(), q_json.size());
    const auto res = run_cli("analyze jsd --p " + (tmp.path / "p.json").string() + " --q " +
                             (tmp.path / "q.json").string());
    CHECK(res.exit_code == 0);
    const auto report = nlohmann::json::parse(res.output);
    CHECK(report["value"].get<double>() == doctest::Approx(0.311278).epsilon(1e-6));
}

TEST_CASE("analyze rouge on inline text") {
    const auto res = run_cli("analyze rouge --a \"the cat sat\" --b \"the cat ran\"");
    CHECK(res.exit_code == 0);
    const auto report = nlohmann::json::parse(res.output);
    CHECK(report["value"].get<double>() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("render subcommand produces images and a manifest, and errors cleanly") {
    TempDir tmp;
    {
        std::ofstream f(tmp.path / "in.jsonl");
        f << R"({"id":"x","text":"Hello world"})" << "\n";
        f << R"({"id":"y","description":"Via the description field"})" << "\n";
    }
    const auto out_dir = tmp.path / "out";
    const auto res = run_cli("render --input " + (tmp.path / "in.jsonl").string() + " --out " +
                             out_dir.string() + " --workers 2");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("2 images") != std::string::npos);
    CHECK(std::filesystem::exists(out_dir / "x.png"));
    CHECK(std::filesystem::exists(out_dir / "y.png"));
    CHECK(std::filesystem::exists(out_dir / "manifest.jsonl"));
    CHECK(std::filesystem::exists(out_dir / "render.run.json"));

    // missing input -> input error exit code
    const auto missing = run_cli("render --input /nonexistent.jsonl --out " + out_dir.string());
    CHECK(missing.exit_code == 3);
}

TEST_CASE("analyze cka against a self-comparison is 1") {
    TempDir tmp;
    const std::string csv = "1.0,2.0\n3.0,4.0\n2.0,0.5\n";
    tpi::util::write_file_bytes(tmp.path / "m.csv", csv.data(), csv.size());
    const auto res = run_cli("analyze cka --x " + (tmp.path / "m.csv").string() + " --y " +
                             (tmp.path / "m.csv").string());
    CHECK(res.exit_code == 0);
    const auto report = nlohmann::json::parse(res.output);
    CHECK(report["value"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("build-trainset ties records to rendered images") {
    TempDir tmp;
    {
        std::ofstream f(tmp.path / "records.jsonl");
        f << R"({"id":"a","question":"What?","answer":"That"})" << "\n";
    }
    {
        std::ofstream f(tmp.path / "manifest.jsonl");
        f << R"({"id":"a","image":"a.png","font_size":32,"lines":1,"truncated":false,"missing_glyphs":0})"
          << "\n";
    }
    const auto out = tmp.path / "train.jsonl";
    const auto res = run_cli("build-trainset --input " + (tmp.path / "records.jsonl").string() +
                             " --manifest " + (tmp.path / "manifest.jsonl").string() + " --out " +
                             out.string());
    CHECK(res.exit_code == 0);
    const auto text = tpi::util::read_file_text(out);
    CHECK(text.find("<image>\\nWhat?") != std::string::npos);
}

TEST_CASE("config file values are honored") {
    TempDir tmp;
    const std::string toml = "[layout]\ndefault_font_size = 16\nmin_font_size = 16\n";
    tpi::util::write_file_bytes(tmp.path / "cfg.toml", toml.data(), toml.size());
    {
        std::ofstream f(tmp.path / "in.jsonl");
        f << R"({"id":"t","text":"Tiny"})" << "\n";
    }
    const auto out_dir = tmp.path / "out";
    const auto res = run_cli("--config " + (tmp.path / "cfg.toml").string() + " render --input " +
                             (tmp.path / "in.jsonl").string() + " --out " + out_dir.string());
    CHECK(res.exit_code == 0);
    const auto manifest = tpi::util::read_file_text(out_dir / "manifest.jsonl");
    CHECK(manifest.find("\"font_size\":16") != std::string::npos);
}

TEST_CASE("bad config exits with the config code") {
    TempDir tmp;
    const std::string toml = "[layout]\npadding = 999\n";
    tpi::util::write_file_bytes(tmp.path / "bad.toml", toml.data(), toml.size());
    const auto res = run_cli("--config " + (tmp.path / "bad.toml").string() +
                             " render --input x --out y");
    CHECK(res.exit_code == 2);
}
