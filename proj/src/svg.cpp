#include "phasemem/svg.hpp"

#include <algorithm>
#include <fstream>

#include "phasemem/csv.hpp"
#include "phasemem/errors.hpp"

namespace phasemem::svg {

void write_line_plot(const std::string& path, const std::string& title,
                     const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw config_error("svg plot: need matched series");
  const double w = 640.0, h = 400.0, margin = 50.0;
  const double xmin = *std::min_element(x.begin(), x.end());
  const double xmax = *std::max_element(x.begin(), x.end());
  const double ymin = *std::min_element(y.begin(), y.end());
  const double ymax = *std::max_element(y.begin(), y.end());
  const double xr = xmax > xmin ? xmax - xmin : 1.0;
  const double yr = ymax > ymin ? ymax - ymin : 1.0;

  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='14'>" << title
      << "</text>\n";
  out << "<line x1='" << margin << "' y1='" << h - margin << "' x2='" << w - margin << "' y2='"
      << h - margin << "' stroke='black'/>\n";
  out << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
      << h - margin << "' stroke='black'/>\n";
  out << "<polyline fill='none' stroke='steelblue' stroke-width='1.5' points='";
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double px = margin + (x[i] - xmin) / xr * (w - 2 * margin);
    const double py = h - margin - (y[i] - ymin) / yr * (h - 2 * margin);
    out << csv::format_double(px) << "," << csv::format_double(py) << " ";
  }
  out << "'/>\n";
  out << "<text x='" << w - margin << "' y='" << h - margin + 28
      << "' text-anchor='end' font-size='11'>" << csv::format_double(xmin) << " .. "
      << csv::format_double(xmax) << "</text>\n";
  out << "</svg>\n";
}

}  // namespace phasemem::svg
