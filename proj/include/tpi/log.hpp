#pragma once

#include <string>
#include <utility>
#include <vector>

namespace tpi::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

void set_level(Level level);
Level level();
Level parse_level(const std::string& name); // throws ConfigError on unknown name

// Emits one JSON object per line on stderr:
//   {"ts":"2026-08-10T12:00:00Z","level":"info","msg":"...","key":"value",...}
void write(Level level, const std::string& msg,
           const std::vector<std::pair<std::string, std::string>>& fields = {});

inline void error(const std::string& msg,
                  const std::vector<std::pair<std::string, std::string>>& fields = {}) {
    write(Level::Error, msg, fields);
}
inline void warn(const std::string& msg,
                 const std::vector<std::pair<std::string, std::string>>& fields = {}) {
    write(Level::Warn, msg, fields);
}
inline void info(const std::string& msg,
                 const std::vector<std::pair<std::string, std::string>>& fields = {}) {
    write(Level::Info, msg, fields);
}
inline void debug(const std::string& msg,
                  const std::vector<std::pair<std::string, std::string>>& fields = {}) {
    write(Level::Debug, msg, fields);
}

} // namespace tpi::log
