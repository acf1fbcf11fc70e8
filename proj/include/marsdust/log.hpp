#pragma once

#include <string_view>

namespace marsdust::log {

enum class Level { error, warn, info, debug };

/// Reads MARSDUST_LOG (error|warn|info|debug). Unset or unknown means warn.
Level level_from_env();
void set_level(Level level);

void error(std::string_view msg);
void warn(std::string_view msg);
void info(std::string_view msg);
void debug(std::string_view msg);

}  // namespace marsdust::log
