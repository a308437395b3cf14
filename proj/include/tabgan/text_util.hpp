#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tabgan {

std::string trim(const std::string& s);
std::string to_lower(const std::string& s);
bool starts_with_icase(const std::string& text, const std::string& prefix);

// Shortest decimal representation that round-trips through double.
// Integral values keep a trailing ".0" so the numeric type stays visible.
std::string format_double(double v);

// Fixed two-decimal rendering, e.g. 80.952 -> "80.95".
std::string format_fixed2(double v);

// Locale-independent full-string parse. Leading/trailing whitespace is
// tolerated; anything else unparsed fails.
std::optional<double> parse_double(const std::string& s);

std::vector<std::string> split_lines(const std::string& text);
std::string join(const std::vector<std::string>& parts, const std::string& sep);

uint64_t fnv1a64(const std::string& data);
std::string hex16(uint64_t v);
uint64_t mix_seed(uint64_t seed, uint64_t salt);

// Case-insensitive search for "<tag>...</tag>"; returns the inner text.
std::optional<std::string> extract_tag_block(const std::string& text, const std::string& tag);

std::string read_file(const std::string& path);     // throws Error on failure
void write_file(const std::string& path, const std::string& content);

}  // namespace tabgan
