#pragma once

#include <string>
#include <vector>

#include "plma/grid.hpp"

namespace plma {

// 17 significant digits, locale-independent ("%.17g").
std::string format_double(double v);

// Atomic file write: temp file in the same directory, then rename.
void atomic_write(const std::string& path, const std::string& content);

// Flat text table: header (bounds, n1, n2, mask flag), then row-major values,
// then mask rows when present.
std::string gridfunction_to_table(const GridFunction& u);
GridFunction gridfunction_from_table(const std::string& text);
void write_gridfunction_table(const std::string& path, const GridFunction& u);
GridFunction read_gridfunction_table(const std::string& path);

// CSV with columns i, j, x1, x2, value [, mask].
std::string gridfunction_to_csv(const GridFunction& u);
void write_gridfunction_csv(const std::string& path, const GridFunction& u);

// Generic CSV: header row + rows of preformatted cells.
std::string rows_to_csv(const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

} // namespace plma
