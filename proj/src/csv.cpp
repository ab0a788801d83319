#include "phasemem/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "phasemem/errors.hpp"

namespace phasemem::csv {

void Table::add_row(std::initializer_list<double> values) { rows.emplace_back(values); }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_table(const Table& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  Table t;
  std::string line;
  bool have_header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      t.header = cells;
      have_header = true;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw data_error(path + ": line " + std::to_string(line_no) + ": non-numeric cell '" +
                         c + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace phasemem::csv

