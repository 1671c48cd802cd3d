#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace pmonge::csv {

/// Shortest round-trip decimal form of `v`; byte-stable across runs.
std::string num(double v);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column(std::string_view name) const;
};

/// Reads a comma separated file with a header line. Blank lines are skipped.
Table read(const std::string& path);
Table parse(std::istream& in, const std::string& origin);

double to_double(const std::string& field, const std::string& origin);
long to_long(const std::string& field, const std::string& origin);

/// Throws IoError with the path if the stream cannot be opened.
void write_file(const std::string& path, const std::string& content);

}  // namespace pmonge::csv
