#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fpe/integrate.hpp"

namespace fpe {

struct TrajectoryMetricConfig {
  double window = 8.0;   // W of the trajectories
  double quad_dt = 1e-3; // grid step; 1/quad_dt must be an integer
  double diam = 1.0;     // domain diameter, for the truncation bound
  int truncation = -1;   // W' override; -1 derives it from the shifts in use

  static TrajectoryMetricConfig for_set(const std::vector<SampledTrajectory>& set, double diam);
  int samples_per_unit() const;
  int whole_window() const;  // floor(W)
};

// diam * 2^(-W'+2): bound on the weight the truncated sum ignores.
double truncation_bound(double diam, int Wp);

struct ShiftedView {
  const SampledTrajectory* base = nullptr;
  int shift = 0;  // the view is t -> base(t + shift)
};

inline ShiftedView view(const SampledTrajectory& g, int shift = 0) { return {&g, shift}; }

// Truncated rho over unit intervals i in [-W', W'-1]. W' comes from
// cfg.truncation or defaults to floor(W) - max(|shift|).
double rho(const ShiftedView& a, const ShiftedView& b, const TrajectoryMetricConfig& cfg);

ShiftedView time_one(const ShiftedView& g, const TrajectoryMetricConfig& cfg);

// max_{0<=i<n} rho(F_1^i a, F_1^i b), with a common W' = floor(W) - (n-1)
// unless cfg.truncation is set.
double dn_metric(const ShiftedView& a, const ShiftedView& b, int n,
                 const TrajectoryMetricConfig& cfg);

// Unit-interval costs of a pair over the whole window: c[j] for base interval
// [j - floor(W), j - floor(W) + 1], j in [0, 2 floor(W)).
std::vector<double> pair_interval_costs(const SampledTrajectory& a, const SampledTrajectory& b,
                                        const TrajectoryMetricConfig& cfg);

// rho of the pair shifted by k, computed from its interval costs.
double rho_from_costs(const std::vector<double>& costs, int W, int k, int Wp);

// Pairwise d_n source for the capacity counts.
class DnOracle {
 public:
  virtual ~DnOracle() = default;
  virtual std::size_t size() const = 0;
  virtual int max_n() const = 0;
  virtual double dn(std::size_t a, std::size_t b, int n) const = 0;
  // Every distance is exact up to this much (truncation, quadrature).
  virtual double resolution() const { return 0.0; }
};

// All pairs, all n in [1, n_max], under the m-step map (F_1^m), from sampled
// trajectories. Stored as float.
class DenseDnTable final : public DnOracle {
 public:
  DenseDnTable(const std::vector<SampledTrajectory>& set, const TrajectoryMetricConfig& cfg,
               int n_max, int step = 1);

  std::size_t size() const override { return n_; }
  int max_n() const override { return n_max_; }
  double dn(std::size_t a, std::size_t b, int n) const override;
  double resolution() const override { return bound_; }
  int truncation() const { return Wp_; }

  // rho matrix at shift 0 (the n = 1 layer).
  double rho0(std::size_t a, std::size_t b) const { return dn(a, b, 1); }

 private:
  std::size_t pair_index(std::size_t a, std::size_t b) const;
  std::size_t n_ = 0;
  int n_max_ = 1;
  int Wp_ = 0;
  double bound_ = 0.0;
  std::vector<float> table_;  // [pair][n-1]
};

}  // namespace fpe
