#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "maxid/errors.hpp"

namespace maxid {

// Minimal CSV handling, adequate for the numeric tables this project moves
// around: comma separated, no quoting, empty field means missing.
namespace csv {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw ConfigError("csv: missing column '" + name + "'");
    }
};

inline Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("csv: cannot open '" + path + "'");
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size())
                throw ConfigError("csv: row with " + std::to_string(cells.size()) +
                                  " cells, expected " + std::to_string(t.header.size()) +
                                  " in '" + path + "'");
            t.rows.push_back(std::move(cells));
        }
    }
    if (first) throw ConfigError("csv: empty file '" + path + "'");
    return t;
}

inline double to_double(const std::string& cell, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("csv: cannot parse '" + cell + "' as number for " + what);
    }
}

inline void write(const std::string& path, const Table& t) {
    std::ofstream out(path);
    if (!out) throw ConfigError("csv: cannot write '" + path + "'");
    for (std::size_t i = 0; i < t.header.size(); ++i)
        out << (i ? "," : "") << t.header[i];
    out << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << row[i];
        out << "\n";
    }
}

// full round-trip precision for doubles
inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace csv
} // namespace maxid
