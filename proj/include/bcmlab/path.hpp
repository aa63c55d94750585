#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace bcmlab {

/// Path sampled on the uniform grid t_i = i * dt, i = 0..values.size()-1.
struct grid_path {
    double dt = 1.0;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double time(std::size_t i) const noexcept { return static_cast<double>(i) * dt; }
    double horizon() const noexcept { return values.empty() ? 0.0 : time(values.size() - 1); }
};

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_path_csv(std::ostream& os, const grid_path& p) {
    os << "t,value\n";
    for (std::size_t i = 0; i < p.size(); ++i) os << format_double(p.time(i)) << ',' << format_double(p.values[i]) << '\n';
}

inline grid_path read_path_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("t,value", 0) != 0) throw io_error("path CSV must start with header t,value");
    std::vector<double> ts, vs;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        std::istringstream ls(line);
        double t, v;
        char comma;
        if (!(ls >> t >> comma >> v) || comma != ',') throw io_error("malformed path line: " + line);
        ts.push_back(t);
        vs.push_back(v);
    }
    if (vs.size() < 2) throw io_error("path needs at least two grid points");
    grid_path p{ts[1] - ts[0], std::move(vs)};
    if (!(p.dt > 0)) throw io_error("path grid must be increasing");
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (std::abs(ts[i] - p.time(i)) > 1e-9 * (1.0 + std::abs(ts[i])))
            throw io_error("path grid is not uniform");
    return p;
}

} // namespace bcmlab
