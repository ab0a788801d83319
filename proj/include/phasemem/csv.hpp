#pragma once

#include <string>
#include <vector>

namespace phasemem::csv {

/// Columnar table with deterministic formatting: doubles are written with
/// %.17g so that a value survives a write/read round trip bit-exactly.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void add_row(std::initializer_list<double> values);
};

std::string format_double(double v);

void write_table(const Table& table, const std::string& path);

/// Minimal reader for tables written by write_table (numeric cells only;
/// '#' comment lines skipped).
Table read_table(const std::string& path);

}  // namespace phasemem::csv
