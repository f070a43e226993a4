#pragma once
// Diagnostics on stderr, filtered by COINPRUNE_LOG (error | info | debug).

#include <string_view>

namespace coinprune::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

/// Parsed once from the environment; unknown values fall back to error.
Level threshold();
void set_threshold(Level level);
inline bool enabled(Level level) { return static_cast<int>(level) <= static_cast<int>(threshold()); }

void write(Level level, std::string_view message);
inline void error(std::string_view m) { write(Level::Error, m); }
inline void info(std::string_view m) { write(Level::Info, m); }
inline void debug(std::string_view m) { write(Level::Debug, m); }

}  // namespace coinprune::log
