#pragma once

#include <functional>
#include <string_view>

namespace lifted {

using LogSink = std::function<void(std::string_view)>;

// Routes warnings; the default sink writes "warning: ..." to stderr.
// Passing an empty function restores the default. Returns the previous sink.
LogSink set_warning_sink(LogSink sink);
void warn(std::string_view message);

}  // namespace lifted
