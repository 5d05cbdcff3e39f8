#include "lifted/logging.hpp"

#include <iostream>
#include <mutex>

namespace lifted {

namespace {
std::mutex g_mutex;
LogSink g_sink;
}  // namespace

LogSink set_warning_sink(LogSink sink) {
  std::lock_guard lock(g_mutex);
  auto previous = std::move(g_sink);
  g_sink = std::move(sink);
  return previous;
}

void warn(std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

}  // namespace lifted
