#include "phasemem/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

// AVX2+FMA variants. Four doubles per lane, scalar tail. Sums use four
// independent accumulators folded at the end, so the summation order differs
// from the scalar reference only by regrouping; the equivalence tests bound
// the difference with n-scaled tolerances.

namespace phasemem::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

void pole_accumulate_avx2(double* out_re, double* out_im, const double* grid,
                          std::size_t n, double e0, double w, double half_width) {
  const __m256d ve0 = _mm256_set1_pd(e0);
  const __m256d vw = _mm256_set1_pd(w);
  const __m256d vg = _mm256_set1_pd(half_width);
  const __m256d vg2 = _mm256_mul_pd(vg, vg);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(grid + i), ve0);
    const __m256d denom = _mm256_fmadd_pd(d, d, vg2);
    const __m256d inv = _mm256_div_pd(vw, denom);
    __m256d re = _mm256_loadu_pd(out_re + i);
    __m256d im = _mm256_loadu_pd(out_im + i);
    re = _mm256_fmadd_pd(d, inv, re);
    im = _mm256_fnmadd_pd(vg, inv, im);
    _mm256_storeu_pd(out_re + i, re);
    _mm256_storeu_pd(out_im + i, im);
  }
  for (; i < n; ++i) {
    const double d = grid[i] - e0;
    const double inv = w / (d * d + half_width * half_width);
    out_re[i] += d * inv;
    out_im[i] -= half_width * inv;
  }
}

void axpy_avx2(double* y, const double* x, double a, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void caxpy_avx2(double* yr, double* yi, const double* xr, const double* xi,
                double ar, double ai, std::size_t n) {
  const __m256d var = _mm256_set1_pd(ar);
  const __m256d vai = _mm256_set1_pd(ai);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vxr = _mm256_loadu_pd(xr + i);
    const __m256d vxi = _mm256_loadu_pd(xi + i);
    __m256d vyr = _mm256_loadu_pd(yr + i);
    __m256d vyi = _mm256_loadu_pd(yi + i);
    vyr = _mm256_fmadd_pd(var, vxr, vyr);
    vyr = _mm256_fnmadd_pd(vai, vxi, vyr);
    vyi = _mm256_fmadd_pd(var, vxi, vyi);
    vyi = _mm256_fmadd_pd(vai, vxr, vyi);
    _mm256_storeu_pd(yr + i, vyr);
    _mm256_storeu_pd(yi + i, vyi);
  }
  for (; i < n; ++i) {
    yr[i] += ar * xr[i] - ai * xi[i];
    yi[i] += ar * xi[i] + ai * xr[i];
  }
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * a[i];
  return s;
}

double sum_p4_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(a + i);
    const __m256d sq = _mm256_mul_pd(v, v);
    acc = _mm256_fmadd_pd(sq, sq, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double sq = a[i] * a[i];
    s += sq * sq;
  }
  return s;
}

double sum_sq_prod_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(va, va), _mm256_mul_pd(vb, vb), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += (a[i] * a[i]) * (b[i] * b[i]);
  return s;
}

std::complex<double> ccorr_lag_avx2(const double* ar, const double* ai,
                                    const double* br, const double* bi,
                                    std::size_t n, std::size_t lag) {
  if (lag >= n) return {0.0, 0.0};
  const std::size_t m = n - lag;
  __m256d acc_re = _mm256_setzero_pd();
  __m256d acc_im = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d var = _mm256_loadu_pd(ar + i);
    const __m256d vai = _mm256_loadu_pd(ai + i);
    const __m256d vbr = _mm256_loadu_pd(br + i + lag);
    const __m256d vbi = _mm256_loadu_pd(bi + i + lag);
    acc_re = _mm256_fmadd_pd(var, vbr, acc_re);
    acc_re = _mm256_fmadd_pd(vai, vbi, acc_re);
    acc_im = _mm256_fmadd_pd(vai, vbr, acc_im);
    acc_im = _mm256_fnmadd_pd(var, vbi, acc_im);
  }
  double re = hsum(acc_re), im = hsum(acc_im);
  for (; i < m; ++i) {
    re += ar[i] * br[i + lag] + ai[i] * bi[i + lag];
    im += ai[i] * br[i + lag] - ar[i] * bi[i + lag];
  }
  return {re, im};
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops table{
      pole_accumulate_avx2, axpy_avx2,       caxpy_avx2,
      dot_avx2,             sum_sq_avx2,     sum_p4_avx2,
      sum_sq_prod_avx2,     ccorr_lag_avx2,
  };
  return table;
}

}  // namespace phasemem::kernels

#endif  // x86-64
