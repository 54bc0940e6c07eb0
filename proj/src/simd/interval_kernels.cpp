#include "fpe/simd/interval_kernels.hpp"

#include <atomic>
#include <cmath>

namespace fpe::simd {

double sum_dist_scalar(const double* a, const double* b, std::size_t n) {
  // Four partial sums in the same lane layout as the vector path keeps the
  // two within a couple of ulps of each other.
  double acc[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int l = 0; l < 4; ++l) {
      const double dx = a[2 * (i + l)] - b[2 * (i + l)];
      const double dy = a[2 * (i + l) + 1] - b[2 * (i + l) + 1];
      acc[l] += std::sqrt(dx * dx + dy * dy);
    }
  }
  double s = (acc[0] + acc[2]) + (acc[1] + acc[3]);
  for (; i < n; ++i) {
    const double dx = a[2 * i] - b[2 * i], dy = a[2 * i + 1] - b[2 * i + 1];
    s += std::sqrt(dx * dx + dy * dy);
  }
  return s;
}

namespace {

inline double point_dist(const double* a, const double* b, std::size_t k) {
  const double dx = a[2 * k] - b[2 * k], dy = a[2 * k + 1] - b[2 * k + 1];
  return std::sqrt(dx * dx + dy * dy);
}

template <double (*Sum)(const double*, const double*, std::size_t)>
void interval_costs_impl(const double* a, const double* b, std::size_t m, std::size_t count,
                         double dt, double* out) {
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t k0 = j * m;
    const double inner = Sum(a + 2 * k0, b + 2 * k0, m + 1);
    out[j] = dt * (inner - 0.5 * (point_dist(a, b, k0) + point_dist(a, b, k0 + m)));
  }
}

std::atomic<int> g_forced{-1};

}  // namespace

void interval_costs_scalar(const double* a, const double* b, std::size_t m, std::size_t count,
                           double dt, double* out) {
  interval_costs_impl<sum_dist_scalar>(a, b, m, count, dt, out);
}

void interval_costs_avx2(const double* a, const double* b, std::size_t m, std::size_t count,
                         double dt, double* out) {
  interval_costs_impl<sum_dist_avx2>(a, b, m, count, dt, out);
}

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

Isa active_isa() {
  const int f = g_forced.load(std::memory_order_relaxed);
  if (f >= 0) return static_cast<Isa>(f);
  return avx2_available() ? Isa::Avx2 : Isa::Scalar;
}

void force_isa(Isa isa) {
  if (isa == Isa::Avx2 && !avx2_available()) isa = Isa::Scalar;
  g_forced.store(static_cast<int>(isa), std::memory_order_relaxed);
}

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

void interval_costs(const double* a, const double* b, std::size_t m, std::size_t count, double dt,
                    double* out) {
  if (active_isa() == Isa::Avx2)
    interval_costs_avx2(a, b, m, count, dt, out);
  else
    interval_costs_scalar(a, b, m, count, dt, out);
}

}  // namespace fpe::simd
