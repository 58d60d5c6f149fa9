#include "tpi/log.hpp"
#include "tpi/errors.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <mutex>

#include <json.hpp>

namespace tpi::log {

namespace {

std::atomic<int> g_level{static_cast<int>(Level::Info)};
std::mutex g_mu;

std::string timestamp_utc() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

const char* level_name(Level l) {
    switch (l) {
        case Level::Error: return "error";
        case Level::Warn: return "warn";
        case Level::Info: return "info";
        case Level::Debug: return "debug";
    }
    return "info";
}

} // namespace

void set_level(Level level) { g_level.store(static_cast<int>(level)); }

Level level() { return static_cast<Level>(g_level.load()); }

Level parse_level(const std::string& name) {
    if (name == "error") return Level::Error;
    if (name == "warn") return Level::Warn;
    if (name == "info") return Level::Info;
    if (name == "debug") return Level::Debug;
    throw ConfigError("unknown log level: " + name);
}

void write(Level lvl, const std::string& msg,
           const std::vector<std::pair<std::string, std::string>>& fields) {
    if (static_cast<int>(lvl) > g_level.load()) return;
    nlohmann::ordered_json row;
    row["ts"] = timestamp_utc();
    row["level"] = level_name(lvl);
    row["msg"] = msg;
    for (const auto& [k, v] : fields) row[k] = v;
    std::lock_guard<std::mutex> lock(g_mu);
    std::fputs(row.dump().c_str(), stderr);
    std::fputc('\n', stderr);
}

} // namespace tpi::log
