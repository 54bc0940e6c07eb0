#include "fpe/traj_space.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "fpe/simd/interval_kernels.hpp"

namespace fpe {

TrajectoryMetricConfig TrajectoryMetricConfig::for_set(const std::vector<SampledTrajectory>& set,
                                                       double diam) {
  TrajectoryMetricConfig c;
  if (!set.empty()) {
    c.window = set.front().window;
    c.quad_dt = set.front().dt;
  }
  c.diam = diam;
  return c;
}

int TrajectoryMetricConfig::samples_per_unit() const {
  const double m = 1.0 / quad_dt;
  const long r = std::lround(m);
  if (r < 1 || std::abs(m - static_cast<double>(r)) > 1e-9 * m)
    throw Error(ErrorCode::InvalidArgument, "quadrature step must divide 1");
  return static_cast<int>(r);
}

int TrajectoryMetricConfig::whole_window() const {
  return static_cast<int>(std::floor(window + 1e-9));
}

double truncation_bound(double diam, int Wp) { return diam * std::ldexp(1.0, -Wp + 2); }

namespace {

const double* raw(const SampledTrajectory& g) {
  return reinterpret_cast<const double*>(g.points.data());
}

std::size_t base_index(const SampledTrajectory& g, int t, int m) {
  // Sample of integer time t: (t + W) / dt.
  return static_cast<std::size_t>(std::llround((t + g.window) * m));
}

void check_view(const ShiftedView& v, int Wp, const TrajectoryMetricConfig& cfg) {
  if (!v.base) throw Error(ErrorCode::InvalidArgument, "empty view");
  if (Wp < 1 || Wp + std::abs(v.shift) > cfg.whole_window())
    throw Error(ErrorCode::WindowExceeded, "view cannot cover the truncation window");
  const std::size_t need = static_cast<std::size_t>(std::llround(2 * v.base->window * cfg.samples_per_unit())) + 1;
  if (v.base->points.size() < need)
    throw Error(ErrorCode::WindowExceeded, "trajectory shorter than its window");
}

double weighted_sum(const double* c, int Wp) {
  // c[0] is interval i = -W'.
  double s = 0.0;
  for (int i = -Wp, j = 0; i < Wp; ++i, ++j) s += std::ldexp(c[j], -std::abs(i));
  return s;
}

}  // namespace

double rho(const ShiftedView& a, const ShiftedView& b, const TrajectoryMetricConfig& cfg) {
  const int W = cfg.whole_window();
  const int Wp = cfg.truncation > 0 ? cfg.truncation : W - std::max(std::abs(a.shift), std::abs(b.shift));
  check_view(a, Wp, cfg);
  check_view(b, Wp, cfg);
  const int m = cfg.samples_per_unit();
  const std::size_t ia = base_index(*a.base, -Wp + a.shift, m);
  const std::size_t ib = base_index(*b.base, -Wp + b.shift, m);
  std::vector<double> c(2 * static_cast<std::size_t>(Wp));
  simd::interval_costs(raw(*a.base) + 2 * ia, raw(*b.base) + 2 * ib, m, c.size(), cfg.quad_dt,
                       c.data());
  return weighted_sum(c.data(), Wp);
}

ShiftedView time_one(const ShiftedView& g, const TrajectoryMetricConfig& cfg) {
  if (std::abs(g.shift + 1) >= cfg.whole_window())
    throw Error(ErrorCode::WindowExceeded, "no shift budget left for F_1");
  return {g.base, g.shift + 1};
}

double dn_metric(const ShiftedView& a, const ShiftedView& b, int n,
                 const TrajectoryMetricConfig& cfg) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  TrajectoryMetricConfig c = cfg;
  if (c.truncation <= 0)
    c.truncation = cfg.whole_window() - (n - 1) - std::max(std::abs(a.shift), std::abs(b.shift));
  double d = 0.0;
  for (int i = 0; i < n; ++i) d = std::max(d, rho({a.base, a.shift + i}, {b.base, b.shift + i}, c));
  return d;
}

std::vector<double> pair_interval_costs(const SampledTrajectory& a, const SampledTrajectory& b,
                                        const TrajectoryMetricConfig& cfg) {
  const int W = cfg.whole_window();
  const int m = cfg.samples_per_unit();
  check_view(view(a), W, cfg);
  check_view(view(b), W, cfg);
  std::vector<double> c(2 * static_cast<std::size_t>(W));
  simd::interval_costs(raw(a) + 2 * base_index(a, -W, m), raw(b) + 2 * base_index(b, -W, m), m,
                       c.size(), cfg.quad_dt, c.data());
  return c;
}

double rho_from_costs(const std::vector<double>& costs, int W, int k, int Wp) {
  if (Wp < 1 || Wp + std::abs(k) > W)
    throw Error(ErrorCode::WindowExceeded, "shift beyond the sampled window");
  return weighted_sum(costs.data() + (W - Wp + k), Wp);
}

// ---------------------------------------------------------------------------

DenseDnTable::DenseDnTable(const std::vector<SampledTrajectory>& set,
                           const TrajectoryMetricConfig& cfg, int n_max, int step)
    : n_(set.size()), n_max_(n_max) {
  if (n_max < 1 || step < 1) throw Error(ErrorCode::InvalidArgument, "n_max and step must be positive");
  const int W = cfg.whole_window();
  Wp_ = cfg.truncation > 0 ? cfg.truncation : W - (n_max - 1) * step;
  if (Wp_ < 1 || Wp_ + (n_max - 1) * step > W)
    throw Error(ErrorCode::WindowExceeded, "window too short for the requested n range");
  bound_ = truncation_bound(cfg.diam, Wp_);

  const std::size_t pairs = n_ * (n_ - (n_ > 0)) / 2;
  const double bytes = static_cast<double>(pairs) * n_max * sizeof(float);
  if (bytes > 3.0e9) throw Error(ErrorCode::InvalidArgument, "distance table would exceed 3 GB");
  table_.assign(pairs * static_cast<std::size_t>(n_max), 0.0f);

  // Only the unit intervals some shift can see.
  const int m = cfg.samples_per_unit();
  const int j0 = W - Wp_, j1 = W + Wp_ + (n_max - 1) * step;
  for (const auto& g : set) check_view(view(g), W, cfg);

  // Branches of one tree share whole stretches of samples; identical
  // intervals cost exactly zero and are skipped.
  const std::size_t span = static_cast<std::size_t>(j1 - j0);
  std::vector<std::uint64_t> digest(n_ * span);
  for (std::size_t a = 0; a < n_; ++a) {
    const double* base = raw(set[a]) + 2 * base_index(set[a], -W, m);
    for (std::size_t j = 0; j < span; ++j) {
      const auto* bytes = reinterpret_cast<const unsigned char*>(base + 2 * (j0 + j) * m);
      std::uint64_t h = 1469598103934665603ULL;
      for (std::size_t k = 0; k < 2 * (static_cast<std::size_t>(m) + 1) * sizeof(double); ++k)
        h = (h ^ bytes[k]) * 1099511628211ULL;
      digest[a * span + j] = h;
    }
  }

  // Pairs are visited in square tiles so both trajectory blocks stay in
  // cache; streaming every b for every a is memory-bound for large sets.
  constexpr std::size_t kTile = 48;
  const std::size_t tiles = (n_ + kTile - 1) / kTile;
  std::atomic<std::size_t> next_tile{0};
  auto work = [&] {
    std::vector<double> c(2 * static_cast<std::size_t>(W), 0.0);
    for (std::size_t ta; (ta = next_tile.fetch_add(1)) < tiles;) {
      const std::size_t a0 = ta * kTile, a1 = std::min(n_, a0 + kTile);
      for (std::size_t b0 = a0; b0 < n_; b0 += kTile) {
        const std::size_t b1 = std::min(n_, b0 + kTile);
        for (std::size_t a = a0; a < a1; ++a) {
          const double* pa = raw(set[a]) + 2 * base_index(set[a], -W, m);
          for (std::size_t b = std::max(b0, a + 1); b < b1; ++b) {
            const double* pb = raw(set[b]) + 2 * base_index(set[b], -W, m);
            std::size_t j = 0;
            while (j < span) {
              const std::size_t off = 2 * (j0 + j) * m;
              if (digest[a * span + j] == digest[b * span + j] &&
                  std::equal(pa + off, pa + off + 2 * (m + 1), pb + off)) {
                c[j0 + j] = 0.0;
                ++j;
                continue;
              }
              std::size_t e = j + 1;
              while (e < span && digest[a * span + e] != digest[b * span + e]) ++e;
              simd::interval_costs(pa + off, pb + off, m, e - j, cfg.quad_dt, c.data() + j0 + j);
              j = e;
            }
            float* row = &table_[pair_index(a, b) * n_max_];
            double d = 0.0;
            for (int i = 0; i < n_max_; ++i) {
              d = std::max(d, rho_from_costs(c, W, i * step, Wp_));
              row[i] = static_cast<float>(d);
            }
          }
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < worker_count(); ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

std::size_t DenseDnTable::pair_index(std::size_t a, std::size_t b) const {
  if (a > b) std::swap(a, b);
  return a * n_ - a * (a + 1) / 2 + (b - a - 1);
}

double DenseDnTable::dn(std::size_t a, std::size_t b, int n) const {
  if (a == b) return 0.0;
  if (n < 1 || n > n_max_) throw Error(ErrorCode::WindowExceeded, "n outside the table");
  return table_[pair_index(a, b) * n_max_ + (n - 1)];
}

}  // namespace fpe
