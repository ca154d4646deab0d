#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ddsv::csv {

struct Row {
    std::size_t line = 0;  // 1-based line number in the source
    std::vector<std::string> cells;
};

struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    /// Index of a header column; throws ParseError when absent.
    std::size_t column(std::string_view name, const std::string& source) const;
};

/// Splits comma-separated text. Blank lines are skipped, cells are trimmed,
/// CRLF endings are accepted. No quoting: none of our schemas need it.
Table parse(std::string_view text, const std::string& source);

/// Strict decimal parse of a whole cell; throws ParseError naming the row.
double to_double(const std::string& cell, const std::string& source, std::size_t line,
                 std::string_view column);

/// Shortest round-trippable representation of a double (17 significant digits).
std::string format(double value);

}  // namespace ddsv::csv
