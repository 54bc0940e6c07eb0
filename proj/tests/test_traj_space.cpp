#include <doctest.h>

#include <cmath>
#include <random>

#include "fpe/simd/interval_kernels.hpp"
#include "fpe/systems.hpp"

using namespace fpe;

namespace {
SampledTrajectory constant_traj(Vec2 p, double W, double dt) {
  SampledTrajectory g;
  g.window = W;
  g.dt = dt;
  g.points.assign(grid_count(W, dt), p);
  return g;
}

// Independent oracle: direct trapezoid over each unit interval, summed with
// weights 2^-|i|, no kernels involved.
double rho_oracle(const SampledTrajectory& a, const SampledTrajectory& b, int Wp, int shift_a, int shift_b) {
  const int m = static_cast<int>(std::lround(1.0 / a.dt));
  const int W = static_cast<int>(a.window);
  double total = 0.0;
  for (int i = -Wp; i < Wp; ++i) {
    double c = 0.0;
    for (int k = 0; k <= m; ++k) {
      const auto ia = static_cast<std::size_t>((i + shift_a + W) * m + k);
      const auto ib = static_cast<std::size_t>((i + shift_b + W) * m + k);
      const double w = (k == 0 || k == m) ? 0.5 : 1.0;
      c += w * std::hypot(a.points[ia].x - b.points[ib].x, a.points[ia].y - b.points[ib].y);
    }
    total += std::ldexp(c / m, -std::abs(i));
  }
  return total;
}
}  // namespace

TEST_CASE("rho of two constant trajectories has the geometric-series value") {
  const auto a = constant_traj({0, 0}, 6, 0.01), b = constant_traj({3, 4}, 6, 0.01);
  TrajectoryMetricConfig cfg;
  cfg.window = 6;
  cfg.quad_dt = 0.01;
  cfg.diam = 10;
  for (int Wp = 1; Wp <= 6; ++Wp) {
    cfg.truncation = Wp;
    // sum_{i=-W'}^{W'-1} 2^-|i| = 3 - 3 * 2^-W'
    CHECK(rho(view(a), view(b), cfg) == doctest::Approx(5.0 * (3 - 3 * std::ldexp(1.0, -Wp))).epsilon(1e-13));
  }
  CHECK(truncation_bound(10, 4) == doctest::Approx(10 * std::ldexp(1.0, -2)));
}

TEST_CASE("rho agrees with the direct oracle on bean trajectories, shifted or not") {
  const auto sys = build_bean().system;
  BranchPolicy pol;
  pol.horizon = 6;
  pol.max_branches = 12;
  const auto set = generate_trajectories(sys, {{-0.3, 0.0}}, pol, 0.01).trajectories;
  REQUIRE(set.size() >= 4);
  auto cfg = TrajectoryMetricConfig::for_set(set, sys.domain.diameter());
  for (std::size_t i = 0; i + 1 < set.size(); ++i) {
    cfg.truncation = -1;
    CHECK(rho(view(set[i]), view(set[i + 1]), cfg) ==
          doctest::Approx(rho_oracle(set[i], set[i + 1], 6, 0, 0)).epsilon(1e-12));
    CHECK(rho(view(set[i], 2), view(set[i + 1], 2), cfg) ==
          doctest::Approx(rho_oracle(set[i], set[i + 1], 4, 2, 2)).epsilon(1e-12));
    const auto c = pair_interval_costs(set[i], set[i + 1], cfg);
    CHECK(rho_from_costs(c, 6, 1, 5) == doctest::Approx(rho_oracle(set[i], set[i + 1], 5, 1, 1)).epsilon(1e-12));
  }
}

TEST_CASE("d_n is the running maximum over shifts") {
  const auto sys = build_bean().system;
  BranchPolicy pol;
  pol.horizon = 8;
  pol.max_branches = 30;
  const auto set = generate_trajectories(sys, {{-0.2, 0.0}}, pol, 0.01).trajectories;
  auto cfg = TrajectoryMetricConfig::for_set(set, sys.domain.diameter());
  const DenseDnTable tab(set, cfg, 3);
  CHECK(tab.truncation() == 6);
  CHECK(tab.resolution() == doctest::Approx(truncation_bound(cfg.diam, 6)));
  for (std::size_t a = 0; a < set.size(); a += 3) {
    for (std::size_t b = a + 1; b < set.size(); b += 5) {
      double want = 0.0;
      for (int i = 0; i < 3; ++i) {
        want = std::max(want, rho_oracle(set[a], set[b], 6, i, i));
        CHECK(tab.dn(a, b, i + 1) == doctest::Approx(want).epsilon(1e-6));
        CHECK(tab.dn(b, a, i + 1) == tab.dn(a, b, i + 1));
      }
      cfg.truncation = 6;
      CHECK(dn_metric(view(set[a]), view(set[b]), 3, cfg) == doctest::Approx(want).epsilon(1e-12));
      cfg.truncation = -1;
    }
  }
  CHECK(tab.dn(2, 2, 1) == 0.0);
  CHECK_THROWS_AS(DenseDnTable(set, cfg, 9), Error);
}

TEST_CASE("time-one map shifts by one unit") {
  const auto a = constant_traj({0, 0}, 4, 0.1);
  TrajectoryMetricConfig cfg;
  cfg.window = 4;
  cfg.quad_dt = 0.1;
  const auto v = time_one(view(a), cfg);
  CHECK(v.shift == 1);
  CHECK(v.base == &a);
}

TEST_CASE("interval kernels: AVX2 matches the scalar reference bit for bit") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  for (std::size_t m : {1u, 2u, 3u, 7u, 10u, 50u, 100u, 1000u}) {
    const std::size_t count = 5;
    std::vector<double> a(2 * (count * m + 1)), b(a.size());
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    std::vector<double> s(count), v(count);
    simd::interval_costs_scalar(a.data(), b.data(), m, count, 1.0 / m, s.data());
    // trapezoid oracle
    for (std::size_t j = 0; j < count; ++j) {
      double t = 0.0;
      for (std::size_t k = 0; k <= m; ++k) {
        const std::size_t q = j * m + k;
        const double d = std::hypot(a[2 * q] - b[2 * q], a[2 * q + 1] - b[2 * q + 1]);
        t += (k == 0 || k == m) ? d / 2 : d;
      }
      CHECK(s[j] == doctest::Approx(t / m).epsilon(1e-13));
    }
    if (!simd::avx2_available()) continue;
    simd::interval_costs_avx2(a.data(), b.data(), m, count, 1.0 / m, v.data());
    for (std::size_t j = 0; j < count; ++j) CHECK(v[j] == s[j]);
    CHECK(simd::sum_dist_avx2(a.data(), b.data(), count * m + 1) ==
          simd::sum_dist_scalar(a.data(), b.data(), count * m + 1));
  }
}

TEST_CASE("forcing the scalar path changes nothing downstream") {
  const auto sys = build_bean().system;
  BranchPolicy pol;
  pol.horizon = 5;
  pol.max_branches = 20;
  const auto set = generate_trajectories(sys, {{-0.4, 0.0}}, pol, 0.01).trajectories;
  const auto cfg = TrajectoryMetricConfig::for_set(set, sys.domain.diameter());
  const auto before = simd::active_isa();
  simd::force_isa(simd::Isa::Scalar);
  const DenseDnTable s(set, cfg, 2);
  simd::force_isa(before);
  const DenseDnTable v(set, cfg, 2);
  for (std::size_t a = 0; a < set.size(); ++a)
    for (std::size_t b = 0; b < set.size(); ++b) CHECK(s.dn(a, b, 2) == v.dn(a, b, 2));
}
