#pragma once

#include <string>

namespace countycast {

// Warnings go to stderr; output files stay clean. Tests can silence them.
void warn(const std::string& msg);
void set_warnings_enabled(bool enabled);
long warning_count();
void reset_warning_count();

} // namespace countycast
