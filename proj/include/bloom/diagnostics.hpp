#pragma once

#include <functional>
#include <string>

namespace bloom {

using WarningSink = std::function<void(const std::string&)>;

// Non-fatal conditions (carried-forward wind days, Peclet warnings, flagged
// Sobol indices) go through a process-wide sink. The default prints to stderr.
void warn(const std::string& message);

// Returns the previous sink so tests can restore it.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace bloom
