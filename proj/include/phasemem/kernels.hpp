#pragma once

#include <complex>
#include <cstddef>

namespace phasemem::kernels {

// Data-parallel inner loops shared by the simulation modules. Every kernel
// has a scalar reference implementation and, on x86-64, an AVX2+FMA variant.
// The variant is picked once at runtime from CPU capabilities; the env var
// PHASEMEM_KERNELS=scalar|avx2 overrides the pick (used by the equivalence
// tests and for debugging).

enum class Lane { scalar, avx2 };

/// Lane selected for this process.
Lane active_lane();
const char* lane_name(Lane lane);

/// Force a lane (throws config_error if unavailable on this machine).
void force_lane(Lane lane);

struct Ops {
  // out_re/out_im += w / (grid - e0 + i*half_width), elementwise over grid.
  void (*pole_accumulate)(double* out_re, double* out_im, const double* grid,
                          std::size_t n, double e0, double w, double half_width);
  // y += a * x
  void (*axpy)(double* y, const double* x, double a, std::size_t n);
  // (yr, yi) += (ar + i*ai) * (xr + i*xi)
  void (*caxpy)(double* yr, double* yi, const double* xr, const double* xi,
                double ar, double ai, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_sq)(const double* a, std::size_t n);
  double (*sum_p4)(const double* a, std::size_t n);
  // sum_i a_i^2 * b_i^2
  double (*sum_sq_prod)(const double* a, const double* b, std::size_t n);
  // sum_{i<n-lag} (a_i) * conj(b_{i+lag}) for split-complex series
  std::complex<double> (*ccorr_lag)(const double* ar, const double* ai,
                                    const double* br, const double* bi,
                                    std::size_t n, std::size_t lag);
};

/// Kernel table for the active lane.
const Ops& ops();

/// Kernel table for a specific lane (scalar table always exists).
const Ops& ops_for(Lane lane);

/// Scalar reference table, for equivalence tests.
const Ops& scalar_ops();

bool avx2_available();

}  // namespace phasemem::kernels
