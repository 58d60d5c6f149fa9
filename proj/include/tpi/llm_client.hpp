#pragma once

#include "tpi/dataset_io.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace tpi::llm {

struct EndpointConfig {
    std::string base_url;                    // e.g. http://localhost:8000/v1
    std::string model;
    std::string api_key_env = "TPI_API_KEY"; // key is read from the environment only
    double timeout_s = 60.0;
    int max_retries = 3;
    double retry_backoff_s = 2.0; // exponential: backoff * 2^attempt
    int max_in_flight = 4;
    int top_logprobs = 10;

    void validate() const;
};

// The prompt texts live as versioned assets under assets/prompts/ and are
// loaded verbatim; tests byte-compare them against golden copies.
enum class DescribeVariant { Default, Words50, Words200, Rich, Words24QA };

DescribeVariant parse_describe_variant(const std::string& name);
const char* describe_variant_name(DescribeVariant v);

enum class RelevancePromptStyle { AppendixA4, Inline };

struct PromptLibrary {
    std::string describe_default;
    std::string describe_50words;
    std::string describe_200words;
    std::string describe_rich;
    std::string describe_24words_qa;
    std::string describe_user;     // "Question: {question}\nAnswer: {answer}"
    std::string augment_system;
    std::string augment_user;      // contains "{demo}"
    std::string relevance_system;
    std::string relevance_user;    // contains "{q}" and "{a}"
    std::string relevance_inline;  // single-prompt phrasing, selectable

    static PromptLibrary load(const std::filesystem::path& assets_dir);
    const std::string& describe_system(DescribeVariant v) const;

    // Fingerprints of every prompt, for run metadata.
    std::vector<std::pair<std::string, std::string>> fingerprints() const;
};

std::string substitute(std::string templ, const std::string& key, const std::string& value);

// File paths become base64 data URLs; http(s) references pass through.
nlohmann::ordered_json image_content_part(const std::string& image_ref);

enum class RelevanceMethod { Logprob, SampledFallback };

struct RelevanceResult {
    double score = 0.0;
    double p_yes = 0.0;
    double p_no = 0.0;
    RelevanceMethod method = RelevanceMethod::Logprob;
};

// Normalization applied to candidate yes/no tokens: trim whitespace and
// BOM artifacts, lowercase ASCII.
std::string normalize_token(const std::string& token);

// Aggregates top-logprob entries [{token, logprob}] into a RelevanceResult;
// `sampled` is the completion text used for the fallback path.
RelevanceResult aggregate_relevance(const nlohmann::json* top_logprobs,
                                    const std::string& sampled);

class ChatClient {
public:
    ChatClient(EndpointConfig cfg, PromptLibrary prompts);

    // POSTs {base_url}/chat/completions with retries on transport errors,
    // 429 and 5xx. Throws TransportError when retries are exhausted.
    nlohmann::json post_chat(const nlohmann::json& body);

    std::string generate_description(const std::string& image_ref, const std::string& question,
                                     const std::string& answer,
                                     DescribeVariant variant = DescribeVariant::Default);

    // Exactly 8 demonstrations; the response must be a single JSON object
    // {question, answer, description} with nonempty strings. Anything else
    // throws IterationFailed for the caller to count.
    io::VqaRecord generate_augmented_example(const std::vector<io::VqaRecord>& demos,
                                             double temperature = 0.7);

    RelevanceResult relevance_score(const std::string& image_ref, const std::string& question,
                                    const std::string& answer,
                                    RelevancePromptStyle style = RelevancePromptStyle::AppendixA4);

    const EndpointConfig& config() const { return cfg_; }
    const PromptLibrary& prompts() const { return prompts_; }
    int last_retries() const { return last_retries_; }
    long total_requests() const { return total_requests_; }

private:
    EndpointConfig cfg_;
    PromptLibrary prompts_;
    std::string origin_;      // scheme://host:port
    std::string path_prefix_; // e.g. /v1
    int last_retries_ = 0;
    long total_requests_ = 0;
};

} // namespace tpi::llm
