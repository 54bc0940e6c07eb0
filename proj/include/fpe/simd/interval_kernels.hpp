#pragma once

#include <cstddef>

// Unit-interval trapezoid costs of |a(t) - b(t)| for two trajectories stored
// as interleaved (x, y) doubles on a shared grid.
//
//   out[j] = dt * ( d[jm]/2 + d[jm+1] + ... + d[jm+m-1] + d[(j+1)m]/2 ),
//   d[k]   = sqrt((ax-bx)^2 + (ay-by)^2) at sample k,
//
// for j in [0, count). Both inputs must hold count*m + 1 points.
namespace fpe::simd {

enum class Isa { Scalar, Avx2 };

void interval_costs_scalar(const double* a, const double* b, std::size_t m, std::size_t count,
                           double dt, double* out);
void interval_costs_avx2(const double* a, const double* b, std::size_t m, std::size_t count,
                         double dt, double* out);

// Sum of point distances over n interleaved points.
double sum_dist_scalar(const double* a, const double* b, std::size_t n);
double sum_dist_avx2(const double* a, const double* b, std::size_t n);

bool avx2_available();
Isa active_isa();
// Forces the scalar path (tests, reproducibility across machines).
void force_isa(Isa isa);
const char* isa_name(Isa isa);

void interval_costs(const double* a, const double* b, std::size_t m, std::size_t count, double dt,
                    double* out);

}  // namespace fpe::simd
