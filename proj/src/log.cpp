#include "coinprune/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace coinprune::log {

namespace {

Level from_env() {
    const char* raw = std::getenv("COINPRUNE_LOG");
    if (raw == nullptr) return Level::Error;
    const std::string v(raw);
    if (v == "debug") return Level::Debug;
    if (v == "info") return Level::Info;
    return Level::Error;
}

std::atomic<int>& level_slot() {
    static std::atomic<int> slot{static_cast<int>(from_env())};
    return slot;
}

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

constexpr std::string_view tag(Level l) {
    switch (l) {
        case Level::Error: return "error";
        case Level::Info: return "info";
        case Level::Debug: return "debug";
    }
    return "?";
}

}  // namespace

Level threshold() { return static_cast<Level>(level_slot().load(std::memory_order_relaxed)); }
void set_threshold(Level level) { level_slot().store(static_cast<int>(level), std::memory_order_relaxed); }

void write(Level level, std::string_view message) {
    if (!enabled(level)) return;
    std::lock_guard lock(sink_mutex());
    std::cerr << "[coinprune " << tag(level) << "] " << message << '\n';
}

}  // namespace coinprune::log
