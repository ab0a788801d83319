#pragma once

#include <string>
#include <vector>

namespace phasemem::svg {

/// Quick-look line plot of (x, y) series; purely cosmetic, generated from the
/// CSV data without touching the data path.
void write_line_plot(const std::string& path, const std::string& title,
                     const std::vector<double>& x, const std::vector<double>& y);

}  // namespace phasemem::svg
