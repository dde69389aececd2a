#pragma once

#include <string>
#include <vector>

namespace hemvsa {

/// Whole file as a string; ParseError when it cannot be opened.
std::string read_text_file(const std::string& path);

/// Comma-separated numeric table. The first non-comment line is a header that
/// must name every entry of `columns`; rows come back in that column order.
/// Blank lines and lines starting with '#' are skipped.
std::vector<std::vector<double>> parse_numeric_csv(const std::string& text, const std::string& source,
                                                   const std::vector<std::string>& columns);

}  // namespace hemvsa
