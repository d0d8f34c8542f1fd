#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refclass::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and
/// doubled quotes; surrounding whitespace is kept verbatim.
std::vector<std::string> split(std::string_view line);

/// Splits text into records, dropping a trailing '\r' and blank lines.
std::vector<std::string> lines(std::string_view text);

/// Parses a finite real number; empty text is std::nullopt and anything else
/// that is not a complete number throws ParseError with `where` in the message.
std::optional<double> parse_real(std::string_view cell, std::string_view where);
long parse_int(std::string_view cell, std::string_view where);

std::string quote(std::string_view field);

std::string read_file(const std::string& path);

}  // namespace refclass::csv
