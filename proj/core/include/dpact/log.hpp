#pragma once

#include <functional>
#include <string_view>

namespace dpact {

using WarningHandler = std::function<void(std::string_view)>;

/// Emit a non-fatal diagnostic. Defaults to stderr.
void warn(std::string_view message);

/// Replace the warning sink; returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace dpact
