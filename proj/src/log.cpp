#include "marsdust/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace marsdust::log {
namespace {

spdlog::logger& logger() {
    static auto instance = [] {
        auto l = spdlog::stderr_color_mt("marsdust");
        l->set_pattern("[%l] %v");
        l->set_level(spdlog::level::warn);
        return l;
    }();
    return *instance;
}

}  // namespace

Level level_from_env() {
    const char* env = std::getenv("MARSDUST_LOG");
    if (env == nullptr) return Level::warn;
    const std::string v(env);
    if (v == "error") return Level::error;
    if (v == "info") return Level::info;
    if (v == "debug") return Level::debug;
    return Level::warn;
}

void set_level(Level level) {
    switch (level) {
        case Level::error: logger().set_level(spdlog::level::err); break;
        case Level::warn: logger().set_level(spdlog::level::warn); break;
        case Level::info: logger().set_level(spdlog::level::info); break;
        case Level::debug: logger().set_level(spdlog::level::debug); break;
    }
}

void error(std::string_view msg) { logger().error("{}", msg); }
void warn(std::string_view msg) { logger().warn("{}", msg); }
void info(std::string_view msg) { logger().info("{}", msg); }
void debug(std::string_view msg) { logger().debug("{}", msg); }

}  // namespace marsdust::log
