#include "emit.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "config.hpp"

namespace equihor::cli {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(std::ostream& out, const CsvTable& table) {
    for (std::size_t j = 0; j < table.header.size(); ++j) out << (j ? "," : "") << table.header[j];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format_double(row[j]);
        out << '\n';
    }
}

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw ParseError("csv has no header");
    std::istringstream head(line);
    for (std::string cell; std::getline(head, cell, ',');) t.header.push_back(cell);
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream cells(line);
        for (std::string cell; std::getline(cells, cell, ',');) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || *end != '\0') throw ParseError("bad csv cell '" + cell + "' on line " + std::to_string(n));
            row.push_back(v);
        }
        if (row.size() != t.header.size()) throw ParseError("csv row " + std::to_string(n) + " has the wrong width");
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable field_table(const ValueField& field) {
    const Grid1D& g = field.grid();
    CsvTable t{{"t", "x", "value"}, {}};
    t.rows.reserve((g.n_t() + 1) * g.n_x());
    for (std::size_t k = 0; k <= g.n_t(); ++k) {
        for (std::size_t i = 0; i < g.n_x(); ++i) t.rows.push_back({g.t(k), g.x(i), field.at(k, i)});
    }
    return t;
}

CsvTable strategy_table(const StrategyTable& table) {
    const Grid1D& g = table.grid();
    CsvTable t{{"t", "x", "u"}, {}};
    t.rows.reserve((g.n_t() + 1) * g.n_x());
    for (std::size_t k = 0; k <= g.n_t(); ++k) {
        for (std::size_t i = 0; i < g.n_x(); ++i) t.rows.push_back({g.t(k), g.x(i), table.at(k, i)});
    }
    return t;
}

CsvTable bitime_table(const BiTimeField& field) {
    const Grid1D& g = field.grid();
    CsvTable t{{"rho", "t", "x", "value"}, {}};
    for (std::size_t j = 0; j <= g.n_t(); ++j) {
        for (std::size_t k = j; k <= g.n_t(); ++k) {
            for (std::size_t i = 0; i < g.n_x(); ++i) t.rows.push_back({g.t(j), g.t(k), g.x(i), field.at(j, k, i)});
        }
    }
    return t;
}

ValueField field_from_table(const CsvTable& table) {
    if (table.header != std::vector<std::string>{"t", "x", "value"}) throw ParseError("expected a t,x,value table");
    if (table.rows.size() < 2) throw ParseError("field table is too short");
    const double t0 = table.rows.front()[0];
    std::size_t n_x = 0;
    while (n_x < table.rows.size() && table.rows[n_x][0] == t0) ++n_x;
    if (n_x < 2 || table.rows.size() % n_x != 0) throw ParseError("field table is not a full grid");
    const std::size_t n_t = table.rows.size() / n_x - 1;
    if (n_t == 0) throw ParseError("field table needs at least two time rows");
    const Grid1D g(table.rows[0][1], table.rows[n_x - 1][1], n_x, t0, table.rows.back()[0], n_t);
    ValueField f(g);
    for (std::size_t k = 0; k <= n_t; ++k) {
        for (std::size_t i = 0; i < n_x; ++i) f.at(k, i) = table.rows[k * n_x + i][2];
    }
    return f;
}

}  // namespace equihor::cli
