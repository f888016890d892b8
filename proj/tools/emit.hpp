#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "equihor/equilibrium.hpp"
#include "equihor/pde.hpp"

namespace equihor::cli {

// Numeric CSV: a header line and rows of doubles written with 17 significant digits.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

void write_csv(std::ostream& out, const CsvTable& table);
/// Throws ParseError on a malformed table.
CsvTable read_csv(std::istream& in);

CsvTable field_table(const ValueField& field);           // t,x,value
CsvTable strategy_table(const StrategyTable& table);     // t,x,u
CsvTable bitime_table(const BiTimeField& field);         // rho,t,x,value

/// Rebuilds a field from a t,x,value table on a uniform grid.
ValueField field_from_table(const CsvTable& table);

std::string format_double(double v);

}  // namespace equihor::cli
