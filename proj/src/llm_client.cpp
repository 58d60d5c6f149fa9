#include "tpi/llm_client.hpp"
#include "tpi/errors.hpp"
#include "tpi/log.hpp"
#include "tpi/util.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace tpi::llm {

using nlohmann::json;
using nlohmann::ordered_json;

void EndpointConfig::validate() const {
    if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
        throw ConfigError("endpoint base_url must start with http:// or https://");
    if (timeout_s <= 0) throw ConfigError("endpoint timeout_s must be positive");
    if (max_retries < 0) throw ConfigError("endpoint max_retries must be nonnegative");
    if (retry_backoff_s <= 0) throw ConfigError("endpoint retry_backoff_s must be positive");
    if (top_logprobs < 1) throw ConfigError("endpoint top_logprobs must be at least 1");
}

DescribeVariant parse_describe_variant(const std::string& name) {
    if (name == "default") return DescribeVariant::Default;
    if (name == "50words") return DescribeVariant::Words50;
    if (name == "200words") return DescribeVariant::Words200;
    if (name == "rich") return DescribeVariant::Rich;
    if (name == "24words_qa") return DescribeVariant::Words24QA;
    throw ConfigError("unknown describe variant: " + name +
                      " (expected default|50words|200words|rich|24words_qa)");
}

const char* describe_variant_name(DescribeVariant v) {
    switch (v) {
        case DescribeVariant::Default: return "default";
        case DescribeVariant::Words50: return "50words";
        case DescribeVariant::Words200: return "200words";
        case DescribeVariant::Rich: return "rich";
        case DescribeVariant::Words24QA: return "24words_qa";
    }
    return "default";
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& assets_dir) {
    const auto dir = assets_dir / "prompts";
    PromptLibrary p;
    p.describe_default = util::read_file_text(dir / "describe_default.txt");
    p.describe_50words = util::read_file_text(dir / "describe_50words.txt");
    p.describe_200words = util::read_file_text(dir / "describe_200words.txt");
    p.describe_rich = util::read_file_text(dir / "describe_rich.txt");
    p.describe_24words_qa = util::read_file_text(dir / "describe_24words_qa.txt");
    p.describe_user = util::read_file_text(dir / "describe_user.txt");
    p.augment_system = util::read_file_text(dir / "augment_system.txt");
    p.augment_user = util::read_file_text(dir / "augment_user.txt");
    p.relevance_system = util::read_file_text(dir / "relevance_system.txt");
    p.relevance_user = util::read_file_text(dir / "relevance_user.txt");
    p.relevance_inline = util::read_file_text(dir / "relevance_inline.txt");
    return p;
}

const std::string& PromptLibrary::describe_system(DescribeVariant v) const {
    switch (v) {
        case DescribeVariant::Default: return describe_default;
        case DescribeVariant::Words50: return describe_50words;
        case DescribeVariant::Words200: return describe_200words;
        case DescribeVariant::Rich: return describe_rich;
        case DescribeVariant::Words24QA: return describe_24words_qa;
    }
    return describe_default;
}

std::vector<std::pair<std::string, std::string>> PromptLibrary::fingerprints() const {
    return {
        {"describe_default", util::hex64(util::fnv1a64(describe_default))},
        {"describe_50words", util::hex64(util::fnv1a64(describe_50words))},
        {"describe_200words", util::hex64(util::fnv1a64(describe_200words))},
        {"describe_rich", util::hex64(util::fnv1a64(describe_rich))},
        {"describe_24words_qa", util::hex64(util::fnv1a64(describe_24words_qa))},
        {"describe_user", util::hex64(util::fnv1a64(describe_user))},
        {"augment_system", util::hex64(util::fnv1a64(augment_system))},
        {"augment_user", util::hex64(util::fnv1a64(augment_user))},
        {"relevance_system", util::hex64(util::fnv1a64(relevance_system))},
        {"relevance_user", util::hex64(util::fnv1a64(relevance_user))},
        {"relevance_inline", util::hex64(util::fnv1a64(relevance_inline))},
    };
}

std::string substitute(std::string templ, const std::string& key, const std::string& value) {
    const std::string needle = "{" + key + "}";
    size_t pos = 0;
    while ((pos = templ.find(needle, pos)) != std::string::npos) {
        templ.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return templ;
}

nlohmann::ordered_json image_content_part(const std::string& image_ref) {
    std::string url;
    if (image_ref.rfind("http://", 0) == 0 || image_ref.rfind("https://", 0) == 0 ||
        image_ref.rfind("data:", 0) == 0) {
        url = image_ref;
    } else {
        const auto bytes = util::read_file_bytes(image_ref);
        std::string mime = "image/png";
        const auto ext = util::lowercase_ascii(std::filesystem::path(image_ref).extension().string());
        if (ext == ".jpg" || ext == ".jpeg") mime = "image/jpeg";
        else if (ext == ".webp") mime = "image/webp";
        url = "data:" + mime + ";base64," + util::base64_encode(bytes.data(), bytes.size());
    }
    return ordered_json{{"type", "image_url"}, {"image_url", {{"url", url}}}};
}

std::string normalize_token(const std::string& token) {
    auto cps = util::utf8_decode(token);
    size_t b = 0, e = cps.size();
    auto strippable = [](uint32_t cp) { return util::is_unicode_space(cp) || cp == 0xFEFF; };
    while (b < e && strippable(cps[b])) ++b;
    while (e > b && strippable(cps[e - 1])) --e;
    std::string out;
    for (size_t i = b; i < e; ++i) {
        uint32_t cp = cps[i];
        if (cp >= 'A' && cp <= 'Z') cp = cp - 'A' + 'a';
        util::utf8_append(out, cp);
    }
    return out;
}

RelevanceResult aggregate_relevance(const json* top_logprobs, const std::string& sampled) {
    RelevanceResult res;
    if (top_logprobs && top_logprobs->is_array() && !top_logprobs->empty()) {
        for (const auto& entry : *top_logprobs) {
            if (!entry.contains("token") || !entry.contains("logprob")) continue;
            const std::string norm = normalize_token(entry["token"].get<std::string>());
            const double p = std::exp(entry["logprob"].get<double>());
            if (norm == "yes")
                res.p_yes += p;
            else if (norm == "no")
                res.p_no += p;
        }
        if (res.p_yes + res.p_no > 0.0) {
            res.method = RelevanceMethod::Logprob;
            res.score = res.p_yes / (res.p_yes + res.p_no);
            return res;
        }
    }
    // No usable logprobs: fall back to the sampled token.
    res.method = RelevanceMethod::SampledFallback;
    res.p_yes = 0.0;
    res.p_no = 0.0;
    const std::string norm = normalize_token(sampled);
    if (norm == "yes") {
        res.score = 1.0;
    } else if (norm == "no") {
        res.score = 0.0;
    } else {
        throw ContentError("relevance fallback: sampled token \"" + sampled +
                           "\" is neither yes nor no");
    }
    return res;
}

namespace {

// scheme://host[:port][/prefix] -> (origin, prefix)
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    const size_t scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("bad base_url: " + base_url);
    const size_t path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

} // namespace

ChatClient::ChatClient(EndpointConfig cfg, PromptLibrary prompts)
    : cfg_(std::move(cfg)), prompts_(std::move(prompts)) {
    cfg_.validate();
    std::tie(origin_, path_prefix_) = split_base_url(cfg_.base_url);
}

json ChatClient::post_chat(const json& body) {
    httplib::Client cli(origin_);
    cli.set_connection_timeout(std::chrono::milliseconds(static_cast<int>(cfg_.timeout_s * 1000)));
    cli.set_read_timeout(std::chrono::milliseconds(static_cast<int>(cfg_.timeout_s * 1000)));
    cli.set_write_timeout(std::chrono::milliseconds(static_cast<int>(cfg_.timeout_s * 1000)));
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()))
        cli.set_default_headers({{"Authorization", std::string("Bearer ") + key}});

    const std::string path = path_prefix_ + "/chat/completions";
    const std::string payload = body.dump();
    last_retries_ = 0;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            last_retries_ = attempt;
            const double delay = cfg_.retry_backoff_s * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        ++total_requests_;
        auto res = cli.Post(path, payload, "application/json");
        if (!res) {
            last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status == 200) {
            auto parsed = json::parse(res->body, nullptr, false);
            if (parsed.is_discarded())
                throw ContentError("endpoint returned invalid JSON");
            return parsed;
        }
        last_error = "HTTP " + std::to_string(res->status);
        if (!retryable_status(res->status))
            throw TransportError("chat completion failed: " + last_error + " " + res->body);
        log::debug("retrying request", {{"status", std::to_string(res->status)},
                                        {"attempt", std::to_string(attempt)}});
    }
    throw TransportError("chat completion failed after " + std::to_string(cfg_.max_retries) +
                         " retries: " + last_error);
}

namespace {

std::string completion_text(const json& response) {
    try {
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw ContentError("response missing choices[0].message.content");
    }
}

} // namespace

std::string ChatClient::generate_description(const std::string& image_ref,
                                             const std::string& question,
                                             const std::string& answer, DescribeVariant variant) {
    std::string user = substitute(prompts_.describe_user, "question", question);
    user = substitute(user, "answer", answer);
    ordered_json body{
        {"model", cfg_.model},
        {"messages",
         {{{"role", "system"}, {"content", prompts_.describe_system(variant)}},
          {{"role", "user"},
           {"content", ordered_json::array(
                           {image_content_part(image_ref),
                            ordered_json{{"type", "text"}, {"text", user}}})}}}},
    };
    const auto response = post_chat(body);
    const std::string text = completion_text(response);
    if (text.empty()) throw ContentError("empty completion");
    return text;
}

io::VqaRecord ChatClient::generate_augmented_example(const std::vector<io::VqaRecord>& demos,
                                                     double temperature) {
    if (demos.size() != 8)
        throw InputError("generate_augmented_example requires exactly 8 demonstrations, got " +
                         std::to_string(demos.size()));
    std::string demo_lines;
    for (size_t i = 0; i < demos.size(); ++i) {
        ordered_json d{{"question", demos[i].question},
                       {"answer", demos[i].answer},
                       {"description", demos[i].description}};
        if (i) demo_lines += '\n';
        demo_lines += d.dump();
    }
    const std::string user = substitute(prompts_.augment_user, "demo", demo_lines);
    ordered_json body{
        {"model", cfg_.model},
        {"messages",
         {{{"role", "system"}, {"content", prompts_.augment_system}},
          {{"role", "user"}, {"content", user}}}},
        {"temperature", temperature},
    };
    const auto response = post_chat(body);
    const std::string text = completion_text(response);

    // Strict single-object parse: anything beyond one JSON object is a failure.
    auto obj = json::parse(util::trim(text), nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
        throw IterationFailed("candidate is not a single JSON object");
    io::VqaRecord rec;
    rec.provenance = io::Provenance::Generated;
    for (const char* key : {"question", "answer", "description"}) {
        auto it = obj.find(key);
        if (it == obj.end() || !it->is_string() || it->get<std::string>().empty())
            throw IterationFailed(std::string("candidate missing nonempty \"") + key + "\"");
    }
    rec.question = obj["question"].get<std::string>();
    rec.answer = obj["answer"].get<std::string>();
    rec.description = obj["description"].get<std::string>();
    return rec;
}

RelevanceResult ChatClient::relevance_score(const std::string& image_ref,
                                            const std::string& question,
                                            const std::string& answer,
                                            RelevancePromptStyle style) {
    ordered_json messages = ordered_json::array();
    std::string user_text;
    if (style == RelevancePromptStyle::AppendixA4) {
        messages.push_back({{"role", "system"}, {"content", prompts_.relevance_system}});
        user_text = substitute(prompts_.relevance_user, "q", question);
        user_text = substitute(user_text, "a", answer);
    } else {
        user_text = prompts_.relevance_inline + "\nQuestion: " + question + "\nAnswer: " + answer;
    }
    messages.push_back(
        {{"role", "user"},
         {"content", ordered_json::array({image_content_part(image_ref),
                                          ordered_json{{"type", "text"}, {"text", user_text}}})}});
    // Appendix A.4 inference settings: deterministic single-token output.
    ordered_json body{
        {"model", cfg_.model},     {"messages", messages},
        {"temperature", 0},        {"max_tokens", 1},
        {"logprobs", true},        {"top_logprobs", cfg_.top_logprobs},
    };
    const auto response = post_chat(body);

    const json* top = nullptr;
    try {
        const auto& t = response.at("choices").at(0).at("logprobs").at("content").at(0).at(
            "top_logprobs");
        top = &t;
    } catch (const json::exception&) {
        top = nullptr;
    }
    std::string sampled;
    try {
        sampled = completion_text(response);
    } catch (const ContentError&) {
        sampled.clear();
    }
    return aggregate_relevance(top, sampled);
}

} // namespace tpi::llm
