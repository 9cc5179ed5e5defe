#include "bloom/diagnostics.hpp"

#include <iostream>
#include <mutex>

namespace bloom {
namespace {

std::mutex sink_mutex;
WarningSink& current_sink() {
  static WarningSink sink = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return sink;
}

}  // namespace

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(sink_mutex);
  if (current_sink()) current_sink()(message);
}

WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard<std::mutex> lock(sink_mutex);
  WarningSink previous = std::move(current_sink());
  current_sink() = std::move(sink);
  return previous;
}

}  // namespace bloom
