#include "ddsv/csv.hpp"

#include <charconv>
#include <cmath>

#include "ddsv/error.hpp"

namespace ddsv::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::size_t Table::column(std::string_view name, const std::string& source) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ParseError(source, 1, "missing column '" + std::string(name) + "'");
}

Table parse(std::string_view text, const std::string& source) {
    Table table;
    std::size_t line_no = 0;
    bool have_header = false;
    // Tolerate a UTF-8 byte order mark.
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size())
            throw ParseError(source, line_no,
                             "expected " + std::to_string(table.header.size()) + " cells, got " +
                                 std::to_string(cells.size()));
        table.rows.push_back(Row{line_no, std::move(cells)});
    }
    if (!have_header) throw ParseError(source, 0, "empty file (no header)");
    return table;
}

double to_double(const std::string& cell, const std::string& source, std::size_t line,
                 std::string_view column) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (cell.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value))
        throw ParseError(source, line,
                         "bad number '" + cell + "' in column '" + std::string(column) + "'");
    return value;
}

std::string format(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

}  // namespace ddsv::csv
