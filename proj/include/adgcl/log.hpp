#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace adgcl {

enum class LogLevel : int { Error = 0, Warn = 1, Info = 2, Debug = 3 };

namespace detail {
inline LogLevel parse_level(const char* s) {
    std::string v = s ? s : "";
    if (v == "error") return LogLevel::Error;
    if (v == "warn") return LogLevel::Warn;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}
}  // namespace detail

// Process-wide level, read once from ADGCL_LOG (error|warn|info|debug).
inline LogLevel log_level() {
    static LogLevel level = detail::parse_level(std::getenv("ADGCL_LOG"));
    return level;
}

template <typename... Args>
void log_at(LogLevel lvl, const char* tag, const char* fmt, Args... args) {
    if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
    std::fprintf(stderr, "[%s] ", tag);
    if constexpr (sizeof...(Args) == 0)
        std::fputs(fmt, stderr);
    else
        std::fprintf(stderr, fmt, args...);
    std::fputc('\n', stderr);
}

#define ADGCL_LOG_ERROR(...) ::adgcl::log_at(::adgcl::LogLevel::Error, "error", __VA_ARGS__)
#define ADGCL_LOG_WARN(...) ::adgcl::log_at(::adgcl::LogLevel::Warn, "warn", __VA_ARGS__)
#define ADGCL_LOG_INFO(...) ::adgcl::log_at(::adgcl::LogLevel::Info, "info", __VA_ARGS__)
#define ADGCL_LOG_DEBUG(...) ::adgcl::log_at(::adgcl::LogLevel::Debug, "debug", __VA_ARGS__)

}  // namespace adgcl
