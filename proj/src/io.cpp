#include "plma/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace plma {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DomainError("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw DomainError("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string gridfunction_to_table(const GridFunction& u) {
    const Grid& g = u.grid;
    std::ostringstream out;
    out << "plma-grid-table 1\n";
    out << format_double(g.x_min) << ' ' << format_double(g.x_max) << ' '
        << format_double(g.y_min) << ' ' << format_double(g.y_max) << '\n';
    out << g.n1 << ' ' << g.n2 << '\n';
    out << (u.has_mask() ? 1 : 0) << '\n';
    for (int i = 0; i < g.n1; ++i) {
        for (int j = 0; j < g.n2; ++j) {
            if (j) out << ' ';
            out << format_double(u.at(i, j));
        }
        out << '\n';
    }
    if (u.has_mask()) {
        for (int i = 0; i < g.n1; ++i) {
            for (int j = 0; j < g.n2; ++j) {
                if (j) out << ' ';
                out << (u.masked(i, j) ? 1 : 0);
            }
            out << '\n';
        }
    }
    return out.str();
}

GridFunction gridfunction_from_table(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "plma-grid-table" || version != 1)
        throw DomainError("not a plma grid table");
    Grid g;
    int has_mask = 0;
    in >> g.x_min >> g.x_max >> g.y_min >> g.y_max >> g.n1 >> g.n2 >> has_mask;
    validate_grid(g);
    GridFunction u(g);
    for (auto& v : u.values)
        if (!(in >> v)) throw DomainError("grid table: truncated values");
    if (has_mask) {
        u.mask.resize(u.values.size());
        for (auto& m : u.mask) {
            int b = 0;
            if (!(in >> b)) throw DomainError("grid table: truncated mask");
            m = b ? 1 : 0;
        }
    }
    return u;
}

void write_gridfunction_table(const std::string& path, const GridFunction& u) {
    atomic_write(path, gridfunction_to_table(u));
}

GridFunction read_gridfunction_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return gridfunction_from_table(buf.str());
}

std::string gridfunction_to_csv(const GridFunction& u) {
    const Grid& g = u.grid;
    std::ostringstream out;
    out << (u.has_mask() ? "i,j,x1,x2,value,mask\n" : "i,j,x1,x2,value\n");
    for (int i = 0; i < g.n1; ++i) {
        for (int j = 0; j < g.n2; ++j) {
            out << i << ',' << j << ',' << format_double(g.coord1(i)) << ','
                << format_double(g.coord2(j)) << ',' << format_double(u.at(i, j));
            if (u.has_mask()) out << ',' << (u.masked(i, j) ? 1 : 0);
            out << '\n';
        }
    }
    return out.str();
}

void write_gridfunction_csv(const std::string& path, const GridFunction& u) {
    atomic_write(path, gridfunction_to_csv(u));
}

std::string rows_to_csv(const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (size_t c = 0; c < header.size(); ++c) {
        if (c) out << ',';
        out << header[c];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << row[c];
        }
        out << '\n';
    }
    return out.str();
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    atomic_write(path, rows_to_csv(header, rows));
}

} // namespace plma
