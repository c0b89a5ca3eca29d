#include "countycast/log.hpp"

#include <atomic>
#include <iostream>

namespace countycast {

namespace {
std::atomic<bool> g_enabled{true};
std::atomic<long> g_count{0};
} // namespace

void warn(const std::string& msg) {
    ++g_count;
    if (g_enabled.load()) std::cerr << "[warn] " << msg << '\n';
}

void set_warnings_enabled(bool enabled) { g_enabled.store(enabled); }

long warning_count() { return g_count.load(); }

void reset_warning_count() { g_count.store(0); }

} // namespace countycast
