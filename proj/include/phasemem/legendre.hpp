#pragma once

#include <vector>

namespace phasemem {

/// P_l(x) by the three-term recurrence.
inline double legendre_p(int l, double x) {
  if (l == 0) return 1.0;
  double pm1 = 1.0, p = x;
  for (int k = 2; k <= l; ++k) {
    const double next = ((2 * k - 1) * x * p - (k - 1) * pm1) / k;
    pm1 = p;
    p = next;
  }
  return p;
}

/// P_0..P_lmax(x).
inline void legendre_all(int lmax, double x, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(lmax) + 1);
  out[0] = 1.0;
  if (lmax == 0) return;
  out[1] = x;
  for (int k = 2; k <= lmax; ++k)
    out[static_cast<std::size_t>(k)] =
        ((2 * k - 1) * x * out[static_cast<std::size_t>(k - 1)] -
         (k - 1) * out[static_cast<std::size_t>(k - 2)]) /
        k;
}

}  // namespace phasemem
