#include <cmath>

#include "fpe/simd/interval_kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>

namespace fpe::simd {

// Four points per iteration: two 256-bit loads hold (x0 y0 x1 y1) and
// (x2 y2 x3 y3); hadd of the squared differences yields |d0|^2 |d2|^2 |d1|^2 |d3|^2.
// Lane l of the accumulator therefore sums points i+{0,2,1,3}[l]; the scalar
// reference reduces its partial sums in the matching order.
__attribute__((target("avx2,fma"))) double sum_dist_avx2(const double* a, const double* b,
                                                          std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + 2 * i), _mm256_loadu_pd(b + 2 * i));
    const __m256d d1 =
        _mm256_sub_pd(_mm256_loadu_pd(a + 2 * i + 4), _mm256_loadu_pd(b + 2 * i + 4));
    const __m256d s = _mm256_hadd_pd(_mm256_mul_pd(d0, d0), _mm256_mul_pd(d1, d1));
    acc = _mm256_add_pd(acc, _mm256_sqrt_pd(s));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  // lanes: 0 -> point 0, 1 -> point 2, 2 -> point 1, 3 -> point 3
  double total = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; i < n; ++i) {
    const double dx = a[2 * i] - b[2 * i], dy = a[2 * i + 1] - b[2 * i + 1];
    total += std::sqrt(dx * dx + dy * dy);
  }
  return total;
}

}  // namespace fpe::simd

#else

namespace fpe::simd {
double sum_dist_avx2(const double* a, const double* b, std::size_t n) {
  return sum_dist_scalar(a, b, n);
}
}  // namespace fpe::simd

#endif
