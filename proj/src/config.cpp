#include "tpi/config.hpp"
#include "tpi/errors.hpp"
#include "tpi/util.hpp"

#include <cctype>
#include <charconv>

#include <json.hpp>

namespace tpi::config {

const std::string& TomlValue::as_string() const {
    if (!is_string()) throw ConfigError("config value is not a string");
    return std::get<std::string>(v);
}

int64_t TomlValue::as_int() const {
    if (!is_int()) throw ConfigError("config value is not an integer");
    return std::get<int64_t>(v);
}

double TomlValue::as_number() const {
    if (is_int()) return static_cast<double>(std::get<int64_t>(v));
    if (is_float()) return std::get<double>(v);
    throw ConfigError("config value is not a number");
}

bool TomlValue::as_bool() const {
    if (!is_bool()) throw ConfigError("config value is not a boolean");
    return std::get<bool>(v);
}

const std::vector<TomlValue>& TomlValue::as_array() const {
    if (!is_array()) throw ConfigError("config value is not an array");
    return std::get<std::vector<TomlValue>>(v);
}

namespace {

struct Cursor {
    const std::string& text;
    size_t pos = 0;
    size_t line = 1;
    std::string origin;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
    }
    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    char take() {
        char c = text[pos++];
        if (c == '\n') ++line;
        return c;
    }
    void skip_inline_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos;
    }
};

std::string parse_basic_string(Cursor& c) {
    // opening quote consumed by caller
    std::string out;
    while (true) {
        if (c.eof()) c.fail("unterminated string");
        char ch = c.take();
        if (ch == '"') return out;
        if (ch == '\n') c.fail("newline in string");
        if (ch != '\\') {
            out.push_back(ch);
            continue;
        }
        if (c.eof()) c.fail("dangling escape");
        char esc = c.take();
        switch (esc) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            default: c.fail(std::string("unsupported escape \\") + esc);
        }
    }
}

TomlValue parse_value(Cursor& c);

TomlValue parse_array(Cursor& c) {
    // opening bracket consumed by caller
    std::vector<TomlValue> items;
    while (true) {
        c.skip_inline_ws();
        if (c.eof()) c.fail("unterminated array");
        if (c.peek() == ']') {
            c.take();
            break;
        }
        items.push_back(parse_value(c));
        c.skip_inline_ws();
        if (c.eof()) c.fail("unterminated array");
        if (c.peek() == ',') {
            c.take();
        } else if (c.peek() != ']') {
            c.fail("expected ',' or ']' in array");
        }
    }
    return TomlValue{std::move(items)};
}

TomlValue parse_scalar_token(Cursor& c) {
    const size_t start = c.pos;
    while (!c.eof()) {
        char ch = c.peek();
        if (ch == ',' || ch == ']' || ch == '#' || ch == '\n' || ch == ' ' || ch == '\t') break;
        c.take();
    }
    std::string tok = c.text.substr(start, c.pos - start);
    if (tok.empty()) c.fail("expected a value");
    if (tok == "true") return TomlValue{true};
    if (tok == "false") return TomlValue{false};
    // integer?
    {
        int64_t iv = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
        if (ec == std::errc() && p == tok.data() + tok.size()) return TomlValue{iv};
    }
    try {
        size_t used = 0;
        double dv = std::stod(tok, &used);
        if (used == tok.size()) return TomlValue{dv};
    } catch (const std::exception&) {
    }
    c.fail("cannot parse value \"" + tok + "\" (strings need double quotes)");
}

TomlValue parse_value(Cursor& c) {
    c.skip_inline_ws();
    if (c.eof()) c.fail("expected a value");
    char ch = c.peek();
    if (ch == '"') {
        c.take();
        return TomlValue{parse_basic_string(c)};
    }
    if (ch == '[') {
        c.take();
        return parse_array(c);
    }
    if (ch == '{') c.fail("inline tables are not supported");
    return parse_scalar_token(c);
}

bool key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

} // namespace

TomlDocument parse_toml(const std::string& text, const std::string& origin) {
    TomlDocument doc;
    Cursor c{text, 0, 1, origin};
    std::string section;
    while (!c.eof()) {
        c.skip_inline_ws();
        if (c.eof()) break;
        char ch = c.peek();
        if (ch == '\n') {
            c.take();
            continue;
        }
        if (ch == '#') {
            while (!c.eof() && c.peek() != '\n') c.take();
            continue;
        }
        if (ch == '[') {
            c.take();
            std::string name;
            while (!c.eof() && c.peek() != ']' && c.peek() != '\n') name.push_back(c.take());
            if (c.eof() || c.peek() != ']') c.fail("unterminated section header");
            c.take();
            name = util::trim(name);
            if (name.empty()) c.fail("empty section name");
            if (name.find('.') != std::string::npos) c.fail("nested sections are not supported");
            section = name;
            doc[section]; // materialize even if empty
            continue;
        }
        // key = value
        std::string key;
        while (!c.eof() && key_char(c.peek())) key.push_back(c.take());
        if (key.empty()) c.fail(std::string("unexpected character '") + ch + "'");
        c.skip_inline_ws();
        if (c.eof() || c.peek() != '=') c.fail("expected '=' after key \"" + key + "\"");
        c.take();
        TomlValue value = parse_value(c);
        c.skip_inline_ws();
        if (!c.eof() && c.peek() == '#')
            while (!c.eof() && c.peek() != '\n') c.take();
        if (!c.eof() && c.peek() != '\n') c.fail("trailing characters after value for \"" + key + "\"");
        if (doc[section].count(key)) c.fail("duplicate key \"" + key + "\"");
        doc[section].emplace(key, std::move(value));
    }
    return doc;
}

TomlDocument parse_toml_file(const std::filesystem::path& path) {
    return parse_toml(util::read_file_text(path), path.string());
}

namespace {

int get_int(const TomlTable& t, const char* key, int fallback) {
    auto it = t.find(key);
    if (it == t.end()) return fallback;
    return static_cast<int>(it->second.as_int());
}

uint64_t get_u64(const TomlTable& t, const char* key, uint64_t fallback) {
    auto it = t.find(key);
    if (it == t.end()) return fallback;
    return static_cast<uint64_t>(it->second.as_int());
}

double get_num(const TomlTable& t, const char* key, double fallback) {
    auto it = t.find(key);
    if (it == t.end()) return fallback;
    return it->second.as_number();
}

std::string get_str(const TomlTable& t, const char* key, const std::string& fallback) {
    auto it = t.find(key);
    if (it == t.end()) return fallback;
    return it->second.as_string();
}

render::Rgb get_color(const TomlTable& t, const char* key, render::Rgb fallback) {
    auto it = t.find(key);
    if (it == t.end()) return fallback;
    if (it->second.is_string()) return render::parse_color(it->second.as_string());
    const auto& arr = it->second.as_array();
    if (arr.size() != 3) throw ConfigError(std::string(key) + ": color array needs 3 channels");
    int ch[3];
    for (int i = 0; i < 3; ++i) {
        ch[i] = static_cast<int>(arr[i].as_int());
        if (ch[i] < 0 || ch[i] > 255)
            throw ConfigError(std::string(key) + ": channel out of [0,255]");
    }
    return {static_cast<uint8_t>(ch[0]), static_cast<uint8_t>(ch[1]), static_cast<uint8_t>(ch[2])};
}

} // namespace

PipelineConfig pipeline_config_from_toml(const TomlDocument& doc) {
    PipelineConfig cfg;
    if (auto it = doc.find("layout"); it != doc.end()) {
        const auto& t = it->second;
        auto& l = cfg.layout;
        l.canvas_width_px = get_int(t, "canvas_width", l.canvas_width_px);
        l.canvas_height_px = get_int(t, "canvas_height", l.canvas_height_px);
        l.padding_px = get_int(t, "padding", l.padding_px);
        l.default_font_size_pt = get_int(t, "default_font_size", l.default_font_size_pt);
        l.min_font_size_pt = get_int(t, "min_font_size", l.min_font_size_pt);
        l.font_size_step_pt = get_int(t, "font_size_step", l.font_size_step_pt);
        l.line_spacing_px = get_int(t, "line_spacing", l.line_spacing_px);
        l.background_color = get_color(t, "background", l.background_color);
        l.text_color = get_color(t, "color", l.text_color);
        l.font_face = get_str(t, "font_face", l.font_face);
        l.validate();
    }
    if (auto it = doc.find("endpoint"); it != doc.end()) {
        const auto& t = it->second;
        auto& e = cfg.endpoint;
        e.base_url = get_str(t, "base_url", e.base_url);
        e.model = get_str(t, "model", e.model);
        e.api_key_env = get_str(t, "api_key_env", e.api_key_env);
        e.timeout_s = get_num(t, "timeout_s", e.timeout_s);
        e.max_retries = get_int(t, "max_retries", e.max_retries);
        e.retry_backoff_s = get_num(t, "retry_backoff_s", e.retry_backoff_s);
        e.max_in_flight = get_int(t, "max_in_flight", e.max_in_flight);
        e.top_logprobs = get_int(t, "top_logprobs", e.top_logprobs);
    }
    if (auto it = doc.find("augment"); it != doc.end()) {
        const auto& t = it->second;
        auto& a = cfg.augment;
        a.iterations = get_u64(t, "iterations", a.iterations);
        a.threshold = get_num(t, "threshold", a.threshold);
        a.rng_seed = get_u64(t, "rng_seed", a.rng_seed);
        a.mode = augment::parse_dedup_mode(
            get_str(t, "mode", augment::dedup_mode_name(a.mode)));
        if (a.threshold <= 0.0 || a.threshold > 1.0)
            throw ConfigError("augment.threshold must be in (0,1]");
    }
    if (auto it = doc.find("paths"); it != doc.end()) {
        const auto& t = it->second;
        cfg.paths.input = get_str(t, "input", cfg.paths.input);
        cfg.paths.out_dir = get_str(t, "out_dir", cfg.paths.out_dir);
        cfg.paths.manifest = get_str(t, "manifest", cfg.paths.manifest);
    }
    return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    return pipeline_config_from_toml(parse_toml_file(path));
}

std::string PipelineConfig::hash() const {
    nlohmann::ordered_json j{
        {"layout",
         {{"canvas_width", layout.canvas_width_px},
          {"canvas_height", layout.canvas_height_px},
          {"padding", layout.padding_px},
          {"default_font_size", layout.default_font_size_pt},
          {"min_font_size", layout.min_font_size_pt},
          {"font_size_step", layout.font_size_step_pt},
          {"line_spacing", layout.line_spacing_px},
          {"background", {layout.background_color.r, layout.background_color.g, layout.background_color.b}},
          {"color", {layout.text_color.r, layout.text_color.g, layout.text_color.b}},
          {"font_face", layout.font_face}}},
        {"endpoint",
         {{"base_url", endpoint.base_url},
          {"model", endpoint.model},
          {"api_key_env", endpoint.api_key_env},
          {"timeout_s", endpoint.timeout_s},
          {"max_retries", endpoint.max_retries},
          {"retry_backoff_s", endpoint.retry_backoff_s},
          {"max_in_flight", endpoint.max_in_flight},
          {"top_logprobs", endpoint.top_logprobs}}},
        {"augment",
         {{"iterations", augment.iterations},
          {"threshold", augment.threshold},
          {"rng_seed", augment.rng_seed},
          {"mode", augment::dedup_mode_name(augment.mode)}}},
        {"paths", {{"input", paths.input}, {"out_dir", paths.out_dir}, {"manifest", paths.manifest}}},
    };
    return util::hex64(util::fnv1a64(j.dump()));
}

} // namespace tpi::config
