#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mind::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
/// Lower-cased letters and digits only.
std::string alnum_lower(std::string_view s);
/// Lower-cased letters only.
std::string alpha_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);
std::size_t word_count(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool contains(std::string_view haystack, std::string_view needle);

} // namespace mind::text
