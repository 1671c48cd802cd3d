#include "pmonge/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pmonge/errors.hpp"

namespace pmonge::csv {

std::string num(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw InvalidInput("missing column '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r' && c != ' ' && c != '\t') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

Table parse(std::istream& in, const std::string& origin) {
    Table t;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = split(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size())
            throw InvalidInput(origin + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(t.header.size()) + " fields");
        t.rows.push_back(std::move(fields));
    }
    if (!have_header) throw InvalidInput(origin + ": empty file");
    return t;
}

Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return parse(in, path);
}

double to_double(const std::string& field, const std::string& origin) {
    // strtod accepts "nan"/"inf", which callers reject explicitly.
    char* end = nullptr;
    double v = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size())
        throw InvalidInput(origin + ": not a number: '" + field + "'");
    return v;
}

long to_long(const std::string& field, const std::string& origin) {
    long v = 0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw InvalidInput(origin + ": not an integer: '" + field + "'");
    return v;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace pmonge::csv
