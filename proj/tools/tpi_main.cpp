// tpi: batch toolkit for text-printed-image dataset construction and analysis.
//
// Subcommands: render, describe, augment, score,
//              analyze {rouge|cka|jsd|gap-ratio}, bench, build-trainset.

#include "tpi/augment.hpp"
#include "tpi/config.hpp"
#include "tpi/dataset_io.hpp"
#include "tpi/errors.hpp"
#include "tpi/layout.hpp"
#include "tpi/llm_client.hpp"
#include "tpi/log.hpp"
#include "tpi/metrics.hpp"
#include "tpi/render.hpp"
#include "tpi/util.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;
constexpr int kExitTransport = 4;
constexpr int kExitPartial = 5;

struct PartialFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string iso_timestamp() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Every run drops a metadata JSON beside its outputs so results can be
// traced back to the exact configuration, prompts and seed.
void write_run_metadata(const std::filesystem::path& out_dir, const std::string& command,
                        const tpi::config::PipelineConfig& cfg,
                        const std::vector<std::pair<std::string, std::string>>& prompt_versions,
                        std::optional<uint64_t> seed, int argc, char** argv) {
    ordered_json meta;
    meta["command"] = command;
    meta["timestamp"] = iso_timestamp();
    meta["config_hash"] = cfg.hash();
    if (seed) meta["seed"] = *seed;
    ordered_json args = ordered_json::array();
    for (int i = 0; i < argc; ++i) args.push_back(argv[i]);
    meta["argv"] = args;
    if (!prompt_versions.empty()) {
        ordered_json pv;
        for (const auto& [k, v] : prompt_versions) pv[k] = v;
        meta["prompt_versions"] = pv;
    }
    const auto text = meta.dump(2);
    std::filesystem::create_directories(out_dir);
    tpi::util::write_file_bytes(out_dir / (command + ".run.json"), text.data(), text.size());
}

struct CommonOpts {
    std::string config_path;
    std::string assets_dir;
    std::string log_level = "info";
};

tpi::config::PipelineConfig load_config(const CommonOpts& common) {
    if (common.config_path.empty()) return {};
    return tpi::config::load_pipeline_config(common.config_path);
}

std::filesystem::path resolve_assets(const CommonOpts& common) {
    if (!common.assets_dir.empty()) {
        if (!std::filesystem::is_directory(common.assets_dir))
            throw tpi::ConfigError("--assets is not a directory: " + common.assets_dir);
        return common.assets_dir;
    }
    return tpi::util::find_assets_dir();
}

// Render input rows: {"id", "text"} or VQA records (the description is the
// rendered text).
std::vector<tpi::render::BatchInput> load_render_inputs(const std::filesystem::path& path) {
    std::vector<tpi::render::BatchInput> inputs;
    const auto text = tpi::util::read_file_text(path);
    size_t line_no = 0;
    size_t start = 0;
    while (start <= text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) {
            if (start > text.size()) break;
            continue;
        }
        auto row = ordered_json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object())
            throw tpi::InputError(path.string() + ":" + std::to_string(line_no) +
                                  ": malformed JSON");
        tpi::render::BatchInput input;
        if (auto it = row.find("id"); it != row.end() && it->is_string())
            input.id = it->get<std::string>();
        else
            throw tpi::InputError(path.string() + ":" + std::to_string(line_no) +
                                  ": missing \"id\"");
        if (auto it = row.find("text"); it != row.end() && it->is_string())
            input.text = it->get<std::string>();
        else if (auto d = row.find("description"); d != row.end() && d->is_string())
            input.text = d->get<std::string>();
        else
            throw tpi::InputError(path.string() + ":" + std::to_string(line_no) +
                                  ": row needs \"text\" or \"description\"");
        inputs.push_back(std::move(input));
    }
    return inputs;
}

std::vector<tpi::render::BatchInput> lorem_corpus(size_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<tpi::render::BatchInput> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const size_t words = 50 + tpi::util::bounded_rand(rng, 101); // 50..150
        out.push_back({"bench-" + std::to_string(i), tpi::util::lorem_text(rng, words)});
    }
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ordered_json analysis_report(const std::string& metric, ordered_json inputs, double value,
                             ordered_json params) {
    ordered_json rep;
    rep["metric"] = metric;
    rep["inputs"] = std::move(inputs);
    rep["value"] = value;
    rep["params"] = std::move(params);
    return rep;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Text-printed-image dataset toolkit"};
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--config", common.config_path, "TOML config file (flags override)");
    app.add_option("--assets", common.assets_dir, "assets directory (fonts, prompts)");
    app.add_option("--log-level", common.log_level, "error|warn|info|debug")
        ->default_val("info");

    // ---- render ----
    auto* render_cmd = app.add_subcommand("render", "Render one PNG per input record");
    std::string render_input, render_out, render_manifest;
    unsigned render_workers = 1;
    int opt_font_size = -1, opt_min_size = -1, opt_step = -1, opt_padding = -1, opt_spacing = -1;
    int opt_canvas_w = -1, opt_canvas_h = -1;
    bool fixed_font_size = false;
    std::string opt_color, opt_background, opt_font_face;
    render_cmd->add_option("--input", render_input, "JSONL with {id, text|description}")
        ->required();
    render_cmd->add_option("--out", render_out, "output directory")->required();
    render_cmd->add_option("--manifest", render_manifest, "manifest filename");
    render_cmd->add_option("--workers", render_workers, "parallel workers")->default_val(1);
    render_cmd->add_option("--font-size", opt_font_size, "starting font size (pt)");
    render_cmd->add_flag("--fixed-font-size", fixed_font_size,
                         "disable the downscaling search (ablation mode)");
    render_cmd->add_option("--min-font-size", opt_min_size, "smallest size tried");
    render_cmd->add_option("--font-size-step", opt_step, "search step (pt)");
    render_cmd->add_option("--padding", opt_padding, "padding per side (px)");
    render_cmd->add_option("--line-spacing", opt_spacing, "line spacing (px)");
    render_cmd->add_option("--canvas-width", opt_canvas_w, "canvas width (px)");
    render_cmd->add_option("--canvas-height", opt_canvas_h, "canvas height (px)");
    render_cmd->add_option("--color", opt_color, "text color (name or r,g,b)");
    render_cmd->add_option("--background", opt_background, "background color");
    render_cmd->add_option("--font", opt_font_face, "bundled face id");

    // ---- bench ----
    auto* bench_cmd = app.add_subcommand("bench", "Rendering throughput benchmark");
    size_t bench_n = 1000;
    unsigned bench_repeat = 3, bench_workers = 0;
    uint64_t bench_seed = 42;
    std::string bench_out;
    bench_cmd->add_option("--n", bench_n, "synthetic descriptions per run")->default_val(1000);
    bench_cmd->add_option("--repeat", bench_repeat, "timing repetitions")->default_val(3);
    bench_cmd->add_option("--workers", bench_workers, "multi-worker count (0 = hardware)")
        ->default_val(0);
    bench_cmd->add_option("--seed", bench_seed, "corpus RNG seed")->default_val(42);
    bench_cmd->add_option("--out", bench_out, "output directory")->required();

    // ---- describe ----
    auto* describe_cmd =
        app.add_subcommand("describe", "Generate descriptions for records with GT images");
    std::string desc_input, desc_out, desc_images_root, desc_variant = "default";
    unsigned desc_workers = 1;
    std::string ep_base_url, ep_model;
    double ep_timeout = 0;
    int ep_retries = -1;
    auto add_endpoint_flags = [&](CLI::App* cmd) {
        cmd->add_option("--base-url", ep_base_url, "chat-completions endpoint base URL");
        cmd->add_option("--model", ep_model, "model name");
        cmd->add_option("--timeout", ep_timeout, "request timeout (s)");
        cmd->add_option("--max-retries", ep_retries, "transport retries");
    };
    describe_cmd->add_option("--input", desc_input, "VQA JSONL")->required();
    describe_cmd->add_option("--out", desc_out, "output JSONL")->required();
    describe_cmd->add_option("--images-root", desc_images_root,
                             "directory GT image paths are relative to");
    describe_cmd->add_option("--variant", desc_variant,
                             "default|50words|200words|rich|24words_qa");
    describe_cmd->add_option("--workers", desc_workers, "parallel requests")->default_val(1);
    add_endpoint_flags(describe_cmd);

    // ---- augment ----
    auto* augment_cmd = app.add_subcommand("augment", "Self-instruct augmentation loop");
    std::string aug_seeds, aug_out, aug_resume, aug_mode;
    uint64_t aug_iterations = 0, aug_seed = 0;
    double aug_threshold = -1.0, aug_temperature = 0.7;
    bool aug_seed_set = false;
    augment_cmd->add_option("--seeds", aug_seeds, "seed pool JSONL");
    augment_cmd->add_option("--iterations", aug_iterations, "generation iterations");
    augment_cmd->add_option("--threshold", aug_threshold, "ROUGE-L duplicate threshold");
    augment_cmd->add_option("--seed", aug_seed, "RNG seed")->each([&](const std::string&) {
        aug_seed_set = true;
    });
    augment_cmd->add_option("--mode", aug_mode, "online|batch_filter");
    augment_cmd->add_option("--temperature", aug_temperature, "generation temperature")
        ->default_val(0.7);
    augment_cmd->add_option("--resume", aug_resume, "checkpoint to resume from");
    augment_cmd->add_option("--out", aug_out, "final pool JSONL")->required();
    add_endpoint_flags(augment_cmd);

    // ---- score ----
    auto* score_cmd = app.add_subcommand("score", "Relevance-score records against their images");
    std::string score_input, score_out, score_images_root, score_style = "a4";
    unsigned score_workers = 1;
    score_cmd->add_option("--input", score_input, "VQA JSONL")->required();
    score_cmd->add_option("--out", score_out, "per-row scores JSONL")->required();
    score_cmd->add_option("--images", score_images_root, "directory image paths are relative to");
    score_cmd->add_option("--style", score_style, "a4|inline prompt phrasing");
    score_cmd->add_option("--workers", score_workers, "parallel requests")->default_val(1);
    add_endpoint_flags(score_cmd);

    // ---- analyze ----
    auto* analyze_cmd = app.add_subcommand("analyze", "Metric kernels over exported artifacts");
    analyze_cmd->require_subcommand(1);
    auto* rouge_cmd = analyze_cmd->add_subcommand("rouge", "ROUGE-L F1 between two texts");
    std::string rouge_a, rouge_b, rouge_a_file, rouge_b_file;
    rouge_cmd->add_option("--a", rouge_a, "first text");
    rouge_cmd->add_option("--b", rouge_b, "second text");
    rouge_cmd->add_option("--a-file", rouge_a_file, "first text from file");
    rouge_cmd->add_option("--b-file", rouge_b_file, "second text from file");

    auto* cka_cmd = analyze_cmd->add_subcommand("cka", "Linear CKA between two matrices");
    std::string cka_x, cka_y;
    cka_cmd->add_option("--x", cka_x, "TPIM or CSV matrix")->required();
    cka_cmd->add_option("--y", cka_y, "TPIM or CSV matrix")->required();

    auto* jsd_cmd = analyze_cmd->add_subcommand("jsd", "Jensen-Shannon divergence");
    std::string jsd_p, jsd_q, jsd_base = "2";
    jsd_cmd->add_option("--p", jsd_p, "JSON distribution")->required();
    jsd_cmd->add_option("--q", jsd_q, "JSON distribution")->required();
    jsd_cmd->add_option("--log-base", jsd_base, "2|e");

    auto* gap_cmd = analyze_cmd->add_subcommand("gap-ratio", "TPI gain over the GT-image gain");
    double gap_pre = 0, gap_tpi = 0, gap_gt = 0;
    gap_cmd->add_option("--pre", gap_pre, "pretrained score")->required();
    gap_cmd->add_option("--tpi", gap_tpi, "TPI-trained score")->required();
    gap_cmd->add_option("--gt", gap_gt, "GT-image-trained score")->required();

    // ---- build-trainset ----
    auto* train_cmd = app.add_subcommand("build-trainset",
                                         "Emit conversation rows for rendered records");
    std::string train_input, train_manifest, train_out;
    train_cmd->add_option("--input", train_input, "VQA JSONL")->required();
    train_cmd->add_option("--manifest", train_manifest, "render manifest JSONL")->required();
    train_cmd->add_option("--out", train_out, "training-set JSONL")->required();

    CLI11_PARSE(app, argc, argv);
    tpi::log::set_level(tpi::log::parse_level(common.log_level));

    auto cfg = load_config(common);

    if (*render_cmd) {
        auto layout = cfg.layout;
        if (opt_font_size > 0) layout.default_font_size_pt = opt_font_size;
        if (opt_min_size > 0) layout.min_font_size_pt = opt_min_size;
        if (fixed_font_size) layout.min_font_size_pt = layout.default_font_size_pt;
        if (opt_step > 0) layout.font_size_step_pt = opt_step;
        if (opt_padding >= 0) layout.padding_px = opt_padding;
        if (opt_spacing >= 0) layout.line_spacing_px = opt_spacing;
        if (opt_canvas_w > 0) layout.canvas_width_px = opt_canvas_w;
        if (opt_canvas_h > 0) layout.canvas_height_px = opt_canvas_h;
        if (!opt_color.empty()) layout.text_color = tpi::render::parse_color(opt_color);
        if (!opt_background.empty())
            layout.background_color = tpi::render::parse_color(opt_background);
        if (!opt_font_face.empty()) layout.font_face = opt_font_face;
        layout.validate();
        cfg.layout = layout;

        const auto assets = resolve_assets(common);
        const auto face = tpi::font::Face::load_bundled(layout.font_face, assets);
        const auto inputs = load_render_inputs(render_input);
        const std::string manifest_name =
            render_manifest.empty() ? cfg.paths.manifest : render_manifest;
        const auto result = tpi::render::render_batch(inputs, layout, render_workers, render_out,
                                                      face, manifest_name);
        write_run_metadata(render_out, "render", cfg, {}, std::nullopt, argc, argv);
        std::cout << result.images_written << " images, " << result.wall_seconds << " seconds, "
                  << result.images_per_sec << " img/s\n";
        return kExitOk;
    }

    if (*bench_cmd) {
        cfg.layout.validate();
        const auto assets = resolve_assets(common);
        const auto face = tpi::font::Face::load_bundled(cfg.layout.font_face, assets);
        if (bench_workers == 0)
            bench_workers = std::max(1u, std::thread::hardware_concurrency());
        const auto corpus = lorem_corpus(bench_n, bench_seed);

        auto run_once = [&](unsigned workers, const std::string& tag) {
            const auto dir = std::filesystem::path(bench_out) / ("bench_" + tag);
            return tpi::render::render_batch(corpus, cfg.layout, workers, dir, face);
        };
        ordered_json report;
        report["n"] = bench_n;
        report["repeats"] = bench_repeat;
        report["corpus_seed"] = bench_seed;
        for (auto [workers, tag] : {std::pair<unsigned, const char*>{1u, "single"},
                                    {bench_workers, "multi"}}) {
            std::vector<double> times;
            for (unsigned rep = 0; rep < bench_repeat; ++rep)
                times.push_back(run_once(workers, tag).wall_seconds);
            const double best = *std::min_element(times.begin(), times.end());
            const double med = median(times);
            report[tag] = {{"workers", workers},
                           {"min_seconds", best},
                           {"median_seconds", med},
                           {"img_per_s_best", bench_n / best},
                           {"img_per_s_median", bench_n / med}};
        }
        write_run_metadata(bench_out, "bench", cfg, {}, bench_seed, argc, argv);
        std::cout << report.dump(2) << "\n";
        return kExitOk;
    }

    auto apply_endpoint_flags = [&]() {
        if (!ep_base_url.empty()) cfg.endpoint.base_url = ep_base_url;
        if (!ep_model.empty()) cfg.endpoint.model = ep_model;
        if (ep_timeout > 0) cfg.endpoint.timeout_s = ep_timeout;
        if (ep_retries >= 0) cfg.endpoint.max_retries = ep_retries;
        cfg.endpoint.validate();
    };

    if (*describe_cmd) {
        apply_endpoint_flags();
        const auto assets = resolve_assets(common);
        const auto prompts = tpi::llm::PromptLibrary::load(assets);
        const auto variant = tpi::llm::parse_describe_variant(desc_variant);
        auto records = tpi::io::read_vqa_jsonl(desc_input);

        std::vector<std::string> failures(records.size());
        std::mutex failures_mu;
        size_t failed = 0;
        tpi::util::parallel_for(records.size(), desc_workers, [&](size_t i) {
            auto& rec = records[i];
            if (!rec.image_path) {
                std::lock_guard lock(failures_mu);
                failures[i] = "no image path";
                ++failed;
                return;
            }
            std::string ref = *rec.image_path;
            if (!desc_images_root.empty() && ref.rfind("http", 0) != 0)
                ref = (std::filesystem::path(desc_images_root) / ref).string();
            try {
                tpi::llm::ChatClient client(cfg.endpoint, prompts);
                rec.description = client.generate_description(ref, rec.question, rec.answer,
                                                              variant);
                rec.extra["describe_variant"] = tpi::llm::describe_variant_name(variant);
            } catch (const std::exception& e) {
                std::lock_guard lock(failures_mu);
                failures[i] = e.what();
                ++failed;
            }
        });
        tpi::io::write_vqa_jsonl(records, desc_out);
        const auto out_dir = std::filesystem::path(desc_out).parent_path();
        write_run_metadata(out_dir.empty() ? "." : out_dir, "describe", cfg,
                           prompts.fingerprints(), std::nullopt, argc, argv);
        if (failed > 0) {
            ordered_json sidecar = ordered_json::array();
            for (size_t i = 0; i < records.size(); ++i)
                if (!failures[i].empty())
                    sidecar.push_back({{"id", records[i].id}, {"error", failures[i]}});
            const auto text = sidecar.dump(2);
            tpi::util::write_file_bytes(desc_out + ".failures.json", text.data(), text.size());
            throw PartialFailure(std::to_string(failed) + "/" + std::to_string(records.size()) +
                                 " records failed; see " + desc_out + ".failures.json");
        }
        std::cout << records.size() << " records described\n";
        return kExitOk;
    }

    if (*augment_cmd) {
        apply_endpoint_flags();
        const auto assets = resolve_assets(common);
        const auto prompts = tpi::llm::PromptLibrary::load(assets);
        tpi::llm::ChatClient client(cfg.endpoint, prompts);
        tpi::augment::Generator gen = [&](const std::vector<tpi::io::VqaRecord>& demos) {
            return client.generate_augmented_example(demos, aug_temperature);
        };

        tpi::augment::AugmentationPool pool;
        if (!aug_resume.empty()) {
            pool = tpi::augment::resume_self_instruct(aug_resume, gen);
        } else {
            if (aug_seeds.empty())
                throw tpi::ConfigError("augment needs --seeds (or --resume)");
            tpi::augment::SelfInstructOptions opt;
            opt.iterations = aug_iterations > 0 ? aug_iterations : cfg.augment.iterations;
            opt.threshold = aug_threshold > 0 ? aug_threshold : cfg.augment.threshold;
            opt.rng_seed = aug_seed_set ? aug_seed : cfg.augment.rng_seed;
            opt.mode = aug_mode.empty() ? cfg.augment.mode
                                        : tpi::augment::parse_dedup_mode(aug_mode);
            opt.checkpoint_path = aug_out + ".ckpt";
            const auto seeds = tpi::io::read_vqa_jsonl(aug_seeds);
            tpi::log::info("augmentation start",
                           {{"seeds", std::to_string(seeds.size())},
                            {"iterations", std::to_string(opt.iterations)},
                            {"threshold", std::to_string(opt.threshold)},
                            {"mode", tpi::augment::dedup_mode_name(opt.mode)}});
            pool = tpi::augment::run_self_instruct(seeds, gen, opt);
        }
        tpi::augment::write_pool_snapshot(pool, aug_out);
        ordered_json stats{{"iterations", pool.stats.iterations},
                           {"accepted", pool.stats.accepted},
                           {"rejected_duplicate", pool.stats.rejected_duplicate},
                           {"rejected_invalid", pool.stats.rejected_invalid},
                           {"pool_size", pool.size()}};
        const auto stats_text = stats.dump(2);
        tpi::util::write_file_bytes(aug_out + ".stats.json", stats_text.data(),
                                    stats_text.size());
        const auto out_dir = std::filesystem::path(aug_out).parent_path();
        write_run_metadata(out_dir.empty() ? "." : out_dir, "augment", cfg,
                           prompts.fingerprints(), aug_seed_set ? aug_seed : cfg.augment.rng_seed,
                           argc, argv);
        std::cout << stats.dump() << "\n";
        return kExitOk;
    }

    if (*score_cmd) {
        apply_endpoint_flags();
        const auto assets = resolve_assets(common);
        const auto prompts = tpi::llm::PromptLibrary::load(assets);
        const auto style = score_style == "inline" ? tpi::llm::RelevancePromptStyle::Inline
                                                   : tpi::llm::RelevancePromptStyle::AppendixA4;
        const auto records = tpi::io::read_vqa_jsonl(score_input);

        struct Row {
            std::string json;
            std::string error;
            double score = 0;
            bool ok = false;
        };
        std::vector<Row> rows(records.size());
        tpi::util::parallel_for(records.size(), score_workers, [&](size_t i) {
            const auto& rec = records[i];
            if (!rec.image_path) {
                rows[i].error = "no image path";
                return;
            }
            std::string ref = *rec.image_path;
            if (!score_images_root.empty() && ref.rfind("http", 0) != 0)
                ref = (std::filesystem::path(score_images_root) / ref).string();
            try {
                tpi::llm::ChatClient client(cfg.endpoint, prompts);
                const auto res = client.relevance_score(ref, rec.question, rec.answer, style);
                ordered_json row{{"id", rec.id},
                                 {"score", res.score},
                                 {"p_yes", res.p_yes},
                                 {"p_no", res.p_no},
                                 {"method", res.method == tpi::llm::RelevanceMethod::Logprob
                                                ? "logprob"
                                                : "sampled_fallback"}};
                rows[i].json = row.dump();
                rows[i].score = res.score;
                rows[i].ok = true;
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        });

        std::ofstream out(score_out, std::ios::trunc);
        if (!out) throw tpi::InputError("cannot open " + score_out);
        double sum = 0;
        size_t ok_count = 0, failed = 0;
        for (const auto& row : rows) {
            if (row.ok) {
                out << row.json << '\n';
                sum += row.score;
                ++ok_count;
            } else {
                ++failed;
            }
        }
        out.close();
        const auto out_dir = std::filesystem::path(score_out).parent_path();
        write_run_metadata(out_dir.empty() ? "." : out_dir, "score", cfg, prompts.fingerprints(),
                           std::nullopt, argc, argv);
        ordered_json summary{{"rows", records.size()},
                             {"scored", ok_count},
                             {"failed", failed},
                             {"mean_score", ok_count ? sum / ok_count : 0.0}};
        std::cout << summary.dump() << "\n";
        if (failed > 0) {
            ordered_json sidecar = ordered_json::array();
            for (size_t i = 0; i < rows.size(); ++i)
                if (!rows[i].ok)
                    sidecar.push_back({{"id", records[i].id}, {"error", rows[i].error}});
            const auto text = sidecar.dump(2);
            tpi::util::write_file_bytes(score_out + ".failures.json", text.data(), text.size());
            throw PartialFailure(std::to_string(failed) + "/" + std::to_string(records.size()) +
                                 " records failed; see " + score_out + ".failures.json");
        }
        return kExitOk;
    }

    if (*rouge_cmd) {
        if (!rouge_a_file.empty()) rouge_a = tpi::util::read_file_text(rouge_a_file);
        if (!rouge_b_file.empty()) rouge_b = tpi::util::read_file_text(rouge_b_file);
        const double value =
            tpi::metrics::rouge_l_f1(tpi::metrics::tokenize(rouge_a), tpi::metrics::tokenize(rouge_b));
        std::cout << analysis_report("rouge_l_f1",
                                     {{"a_tokens", tpi::metrics::tokenize(rouge_a).size()},
                                      {"b_tokens", tpi::metrics::tokenize(rouge_b).size()}},
                                     value, ordered_json::object())
                         .dump()
                  << "\n";
        return kExitOk;
    }

    if (*cka_cmd) {
        const auto x = tpi::io::read_matrix(cka_x);
        const auto y = tpi::io::read_matrix(cka_y);
        const double value = tpi::metrics::linear_cka(x.data, x.rows, x.cols, y.data, y.rows, y.cols);
        std::cout << analysis_report(
                         "linear_cka",
                         {{"x", cka_x}, {"y", cka_y}, {"rows", x.rows},
                          {"x_cols", x.cols}, {"y_cols", y.cols}},
                         value, {{"kernel", "linear"}, {"precision", "double"}})
                         .dump()
                  << "\n";
        return kExitOk;
    }

    if (*jsd_cmd) {
        const auto p = tpi::io::read_distribution(jsd_p);
        const auto q = tpi::io::read_distribution(jsd_q);
        const auto base = jsd_base == "e" ? tpi::metrics::LogBase::Natural
                                          : tpi::metrics::LogBase::Two;
        const double value = tpi::metrics::js_divergence(p.probs, q.probs, base);
        std::cout << analysis_report("js_divergence", {{"p", jsd_p}, {"q", jsd_q}}, value,
                                     {{"log_base", jsd_base == "e" ? "e" : "2"}})
                         .dump()
                  << "\n";
        return kExitOk;
    }

    if (*gap_cmd) {
        tpi::metrics::GapRatioInputs in{gap_pre, gap_tpi, gap_gt};
        const double value = tpi::metrics::gap_ratio(in);
        const int pct = tpi::metrics::gap_ratio_percent(in);
        auto rep = analysis_report("gap_ratio",
                                   {{"pretrained", gap_pre}, {"tpi", gap_tpi}, {"gt_image", gap_gt}},
                                   value, ordered_json::object());
        rep["percent"] = pct;
        std::cout << rep.dump() << "\n" << pct << "%\n";
        return kExitOk;
    }

    if (*train_cmd) {
        const auto records = tpi::io::read_vqa_jsonl(train_input);
        const auto manifest = tpi::io::read_manifest(train_manifest);
        const auto summary = tpi::io::write_training_set(records, manifest, train_out);
        std::cout << summary.rows << " training rows written\n";
        return kExitOk;
    }

    return kExitConfig;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const tpi::ConfigError& e) {
        tpi::log::error(e.what());
        return kExitConfig;
    } catch (const tpi::InputError& e) {
        tpi::log::error(e.what());
        return kExitInput;
    } catch (const tpi::FontError& e) {
        tpi::log::error(e.what());
        return kExitInput;
    } catch (const tpi::TransportError& e) {
        tpi::log::error(e.what());
        return kExitTransport;
    } catch (const PartialFailure& e) {
        tpi::log::error(e.what());
        return kExitPartial;
    } catch (const std::exception& e) {
        tpi::log::error(e.what());
        return 1;
    }
}
