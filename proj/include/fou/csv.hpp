#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fou/grid.hpp"
#include "fou/kernels.hpp"
#include "fou/simulation.hpp"

namespace fou::csv {

// Fixed shortest round-trip formatting so identical runs are byte-identical.
inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::ofstream open_out(const std::string& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open for writing: " + file);
    return out;
}

// Single path: header `t,value`. Multiple paths: header `path_id,t,value`.
inline void write_path(const std::string& file, const Path& p) {
    auto out = open_out(file);
    out << "t,value\n";
    for (std::size_t i = 0; i < p.size(); ++i)
        out << fmt(p.grid.node(i)) << ',' << fmt(p.values[i]) << '\n';
}

inline void write_paths(const std::string& file, const std::vector<Path>& paths) {
    auto out = open_out(file);
    out << "path_id,t,value\n";
    for (std::size_t k = 0; k < paths.size(); ++k)
        for (std::size_t i = 0; i < paths[k].size(); ++i)
            out << k << ',' << fmt(paths[k].grid.node(i)) << ',' << fmt(paths[k].values[i])
                << '\n';
}

inline void write_kernel_matrix(const std::string& file, const KernelMatrix& m) {
    auto out = open_out(file);
    out << "i,j,value\n";
    for (std::size_t i = 0; i <= m.grid.steps; ++i)
        for (std::size_t j = 0; j < m.grid.steps; ++j)
            out << i << ',' << j << ',' << fmt(m(i, j)) << '\n';
}

struct ParsedPaths {
    Grid grid;
    std::vector<std::vector<double>> values;  // one vector per path_id
};

namespace detail {

inline std::vector<std::string> split(const std::string& line, char delim = ',') {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, delim)) out.push_back(item);
    return out;
}

inline double parse_double(const std::string& s, std::size_t lineno) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw std::runtime_error("malformed CSV value '" + s + "' at line " +
                                 std::to_string(lineno));
    }
}

}  // namespace detail

// Accepts both `t,value` and `path_id,t,value` layouts.
inline ParsedPaths read_paths(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open: " + file);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + file);
    ++lineno;
    const auto header = detail::split(line);
    bool with_id;
    if (header.size() == 2 && header[0] == "t")
        with_id = false;
    else if (header.size() == 3 && header[0] == "path_id")
        with_id = true;
    else
        throw std::runtime_error(file + ": unrecognized header at line 1");

    std::vector<std::vector<double>> times;
    std::vector<std::vector<double>> vals;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto parts = detail::split(line);
        if (parts.size() != header.size())
            throw std::runtime_error(file + ": wrong column count at line " +
                                     std::to_string(lineno));
        std::size_t id = 0;
        std::size_t off = 0;
        if (with_id) {
            id = static_cast<std::size_t>(detail::parse_double(parts[0], lineno));
            off = 1;
        }
        if (id >= times.size()) {
            times.resize(id + 1);
            vals.resize(id + 1);
        }
        times[id].push_back(detail::parse_double(parts[off], lineno));
        vals[id].push_back(detail::parse_double(parts[off + 1], lineno));
    }
    if (vals.empty() || vals[0].size() < 3) throw std::runtime_error(file + ": no data rows");
    const auto& t0 = times[0];
    ParsedPaths out;
    out.grid = Grid(t0.back(), t0.size() - 1);
    for (std::size_t k = 0; k < vals.size(); ++k) {
        if (vals[k].size() != t0.size())
            throw std::runtime_error(file + ": ragged path lengths");
        out.values.push_back(std::move(vals[k]));
    }
    return out;
}

}  // namespace fou::csv
