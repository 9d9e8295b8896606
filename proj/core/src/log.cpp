#include "dpact/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace dpact {
namespace {

std::mutex& handler_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& current_handler() {
    static WarningHandler handler = [](std::string_view msg) {
        std::cerr << "dpact: warning: " << msg << '\n';
    };
    return handler;
}

}  // namespace

void warn(std::string_view message) {
    std::lock_guard lock(handler_mutex());
    if (current_handler()) current_handler()(message);
}

WarningHandler set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(handler_mutex());
    return std::exchange(current_handler(), std::move(handler));
}

}  // namespace dpact
