#include "phasemem/kernels.hpp"

// Reference kernels. Plain loops, kept branch-free in the hot paths so the
// AVX2 variants can be checked against them with tight tolerances.

namespace phasemem::kernels {
namespace {

void pole_accumulate_scalar(double* out_re, double* out_im, const double* grid,
                            std::size_t n, double e0, double w, double half_width) {
  const double g = half_width;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = grid[i] - e0;
    const double inv = w / (d * d + g * g);
    out_re[i] += d * inv;
    out_im[i] -= g * inv;
  }
}

void axpy_scalar(double* y, const double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void caxpy_scalar(double* yr, double* yi, const double* xr, const double* xi,
                  double ar, double ai, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    yr[i] += ar * xr[i] - ai * xi[i];
    yi[i] += ar * xi[i] + ai * xr[i];
  }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

double sum_p4_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sq = a[i] * a[i];
    s += sq * sq;
  }
  return s;
}

double sum_sq_prod_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (a[i] * a[i]) * (b[i] * b[i]);
  return s;
}

std::complex<double> ccorr_lag_scalar(const double* ar, const double* ai,
                                      const double* br, const double* bi,
                                      std::size_t n, std::size_t lag) {
  double re = 0.0, im = 0.0;
  if (lag >= n) return {0.0, 0.0};
  const std::size_t m = n - lag;
  for (std::size_t i = 0; i < m; ++i) {
    // a_i * conj(b_{i+lag})
    re += ar[i] * br[i + lag] + ai[i] * bi[i + lag];
    im += ai[i] * br[i + lag] - ar[i] * bi[i + lag];
  }
  return {re, im};
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops table{
      pole_accumulate_scalar, axpy_scalar,       caxpy_scalar,
      dot_scalar,             sum_sq_scalar,     sum_p4_scalar,
      sum_sq_prod_scalar,     ccorr_lag_scalar,
  };
  return table;
}

}  // namespace phasemem::kernels
