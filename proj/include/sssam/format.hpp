#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sssam {

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// Strict full-string parse; throws ConfigError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

} // namespace sssam
