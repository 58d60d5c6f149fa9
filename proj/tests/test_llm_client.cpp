#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/mock_endpoint.hpp"
#include "tpi/errors.hpp"
#include "tpi/llm_client.hpp"
#include "tpi/util.hpp"

#include <atomic>
#include <cmath>

using namespace tpi;
using tpi::testing::MockEndpoint;

namespace {

llm::EndpointConfig test_config(const MockEndpoint& server) {
    llm::EndpointConfig cfg;
    cfg.base_url = server.base_url();
    cfg.model = "mock-model";
    cfg.timeout_s = 10;
    cfg.max_retries = 3;
    cfg.retry_backoff_s = 0.01;
    return cfg;
}

llm::PromptLibrary prompts() { return llm::PromptLibrary::load(util::find_assets_dir()); }

std::vector<io::VqaRecord> make_demos(size_t n) {
    std::vector<io::VqaRecord> demos(n);
    for (size_t i = 0; i < n; ++i) {
        demos[i].id = "demo-" + std::to_string(i);
        demos[i].question = "q" + std::to_string(i);
        demos[i].answer = "a" + std::to_string(i);
        demos[i].description = "d" + std::to_string(i);
    }
    return demos;
}

} // namespace

TEST_CASE("generate_description returns the mock caption and sends the prompt verbatim") {
    MockEndpoint server;
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        MockEndpoint::reply_json(res, MockEndpoint::text_response("a fixed caption"));
    });
    llm::ChatClient client(test_config(server), prompts());
    const auto caption = client.generate_description("https://example.test/img.png",
                                                     "What is shown?", "a cat");
    CHECK(caption == "a fixed caption");

    const auto reqs = server.requests();
    REQUIRE(reqs.size() == 1);
    const auto& body = reqs[0];
    CHECK(body["model"] == "mock-model");
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == prompts().describe_default);
    // user message carries the image part then the QA text
    const auto& content = body["messages"][1]["content"];
    CHECK(content[0]["type"] == "image_url");
    CHECK(content[0]["image_url"]["url"] == "https://example.test/img.png");
    CHECK(content[1]["text"] == "Question: What is shown?\nAnswer: a cat");
}

TEST_CASE("describe variants select their stored prompt") {
    MockEndpoint server;
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        MockEndpoint::reply_json(res, MockEndpoint::text_response("ok"));
    });
    llm::ChatClient client(test_config(server), prompts());
    client.generate_description("http://x/img.png", "q", "a", llm::DescribeVariant::Rich);
    const auto reqs = server.requests();
    CHECK(reqs.back()["messages"][0]["content"] == prompts().describe_rich);
}

TEST_CASE("file image refs become base64 data urls") {
    MockEndpoint server;
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        MockEndpoint::reply_json(res, MockEndpoint::text_response("ok"));
    });
    const auto tmp = std::filesystem::temp_directory_path() / "tpi_llm_img.png";
    const uint8_t fake[] = {1, 2, 3, 4};
    util::write_file_bytes(tmp, fake, sizeof fake);
    llm::ChatClient client(test_config(server), prompts());
    client.generate_description(tmp.string(), "q", "a");
    std::filesystem::remove(tmp);
    const auto url =
        server.requests().back()["messages"][1]["content"][0]["image_url"]["url"].get<std::string>();
    CHECK(url == "data:image/png;base64,AQIDBA==");
}

TEST_CASE("429 twice then 200 succeeds with 2 retries recorded") {
    MockEndpoint server;
    std::atomic<int> hits{0};
    server.set_handler([&](const nlohmann::json&, httplib::Response& res) {
        if (++hits <= 2) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
            return;
        }
        MockEndpoint::reply_json(res, MockEndpoint::text_response("eventually"));
    });
    llm::ChatClient client(test_config(server), prompts());
    CHECK(client.generate_description("http://x/i.png", "q", "a") == "eventually");
    CHECK(client.last_retries() == 2);
    CHECK(hits == 3);
}

TEST_CASE("retries exhausted raises TransportError") {
    MockEndpoint server;
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        res.status = 503;
        res.set_content("down", "text/plain");
    });
    auto cfg = test_config(server);
    cfg.max_retries = 1;
    llm::ChatClient client(cfg, prompts());
    CHECK_THROWS_AS(client.generate_description("http://x/i.png", "q", "a"), TransportError);
}

TEST_CASE("empty completion is a content error") {
    MockEndpoint server;
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        MockEndpoint::reply_json(res, MockEndpoint::text_response(""));
    });
    llm::ChatClient client(test_config(server), prompts());
    CHECK_THROWS_AS(client.generate_description("http://x/i.png", "q", "a"), ContentError);
}

TEST_CASE("generate_augmented_example parses a strict single JSON object") {
    MockEndpoint server;
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        MockEndpoint::reply_json(
            res, MockEndpoint::text_response(
                     R"({"question":"Q","answer":"A","description":"D"})"));
    });
    llm::ChatClient client(test_config(server), prompts());
    const auto rec = client.generate_augmented_example(make_demos(8));
    CHECK(rec.question == "Q");
    CHECK(rec.answer == "A");
    CHECK(rec.description == "D");
    CHECK(rec.provenance == io::Provenance::Generated);

    // The request embeds the 8 demos one JSON per line inside the template,
    // at temperature 0.7.
    const auto body = server.requests().back();
    CHECK(body["temperature"] == doctest::Approx(0.7));
    CHECK(body["messages"][0]["content"] == prompts().augment_system);
    const auto user = body["messages"][1]["content"].get<std::string>();
    CHECK(user.find("Here are seed examples (one JSON per line):") == 0);
    size_t lines = 0, pos = 0;
    while ((pos = user.find("\"question\":", pos)) != std::string::npos) {
        ++lines;
        pos += 1;
    }
    CHECK(lines == 8);
}

TEST_CASE("prose around the JSON object fails the iteration") {
    MockEndpoint server;
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        MockEndpoint::reply_json(res, MockEndpoint::text_response(
                                          "Sure! Here is the example:\n{\"question\":\"Q\","
                                          "\"answer\":\"A\",\"description\":\"D\"}"));
    });
    llm::ChatClient client(test_config(server), prompts());
    CHECK_THROWS_AS(client.generate_augmented_example(make_demos(8)), IterationFailed);
}

TEST_CASE("schema violations fail the iteration") {
    MockEndpoint server;
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        MockEndpoint::reply_json(
            res, MockEndpoint::text_response(R"({"question":"Q","answer":""})"));
    });
    llm::ChatClient client(test_config(server), prompts());
    CHECK_THROWS_AS(client.generate_augmented_example(make_demos(8)), IterationFailed);
}

TEST_CASE("7 demos fail the precondition before any network call") {
    MockEndpoint server;
    llm::ChatClient client(test_config(server), prompts());
    CHECK_THROWS_AS(client.generate_augmented_example(make_demos(7)), InputError);
    CHECK(server.requests().empty());
}

TEST_CASE("relevance aggregation: clean yes/no logprobs") {
    MockEndpoint server;
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        MockEndpoint::reply_json(res, MockEndpoint::logprob_response(
                                          "Yes", {{"Yes", std::log(0.9)}, {"No", std::log(0.1)}}));
    });
    llm::ChatClient client(test_config(server), prompts());
    const auto result = client.relevance_score("http://x/i.png", "q?", "a");
    CHECK(result.method == llm::RelevanceMethod::Logprob);
    CHECK(result.score == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(result.p_yes == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(result.p_no == doctest::Approx(0.1).epsilon(1e-12));

    // Appendix A.4 inference settings must appear verbatim in the request.
    const auto body = server.requests().back();
    CHECK(body["temperature"] == 0);
    CHECK(body["max_tokens"] == 1);
    CHECK(body["logprobs"] == true);
    CHECK(body["top_logprobs"] == 10);
    CHECK(body["messages"][0]["content"] == "Output only Yes or No.");
    const auto user = body["messages"][1]["content"][1]["text"].get<std::string>();
    CHECK(user == "Is the image relevant to the following Q&A?\nQuestion: q?\nAnswer: a");
}

TEST_CASE("relevance aggregation sums case and whitespace variants") {
    MockEndpoint server;
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        MockEndpoint::reply_json(
            res, MockEndpoint::logprob_response("No", {{"Yes", std::log(0.3)},
                                                       {" yes", std::log(0.2)},
                                                       {"No", std::log(0.5)}}));
    });
    llm::ChatClient client(test_config(server), prompts());
    const auto result = client.relevance_score("http://x/i.png", "q", "a");
    CHECK(result.p_yes == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(result.p_no == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(result.score == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("relevance falls back to the sampled token without logprobs") {
    MockEndpoint server;
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        MockEndpoint::reply_json(res, MockEndpoint::text_response("Yes"));
    });
    llm::ChatClient client(test_config(server), prompts());
    const auto result = client.relevance_score("http://x/i.png", "q", "a");
    CHECK(result.method == llm::RelevanceMethod::SampledFallback);
    CHECK(result.score == 1.0);
}

TEST_CASE("relevance fallback on an unrelated token is a content error") {
    MockEndpoint server;
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        MockEndpoint::reply_json(res, MockEndpoint::text_response("Maybe"));
    });
    llm::ChatClient client(test_config(server), prompts());
    CHECK_THROWS_AS(client.relevance_score("http://x/i.png", "q", "a"), ContentError);
}

TEST_CASE("inline prompt style uses the alternative phrasing") {
    MockEndpoint server;
    server.set_handler([](const nlohmann::json&, httplib::Response& res) {
        MockEndpoint::reply_json(res, MockEndpoint::logprob_response("Yes", {{"Yes", -0.1}}));
    });
    llm::ChatClient client(test_config(server), prompts());
    client.relevance_score("http://x/i.png", "q", "a", llm::RelevancePromptStyle::Inline);
    const auto body = server.requests().back();
    // no system message in the inline variant
    CHECK(body["messages"].size() == 1);
    const auto user = body["messages"][0]["content"][1]["text"].get<std::string>();
    CHECK(user.rfind("Is the image relevant to the following Question and Answer? "
                     "Please answer Yes or No.",
                     0) == 0);
}

TEST_CASE("token normalization strips spacing artifacts") {
    CHECK(llm::normalize_token(" Yes") == "yes");
    CHECK(llm::normalize_token("NO\n") == "no");
    CHECK(llm::normalize_token("\xEF\xBB\xBFYes") == "yes");
    CHECK(llm::normalize_token("yes.") == "yes.");
}

TEST_CASE("endpoint config validation") {
    llm::EndpointConfig cfg;
    cfg.base_url = "ftp://nope";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.base_url = "http://ok:1";
    cfg.timeout_s = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
