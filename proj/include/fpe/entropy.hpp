#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fpe/traj_space.hpp"

namespace fpe {

struct CapacityCounts {
  double eps = 0.0;
  int n = 0;
  long span_upper = 0;
  long sep_lower = 0;
};

// Greedy (n, eps)-cover with open d_n balls: repeatedly take the point whose
// ball holds most uncovered points, ties to the lowest index. The result is
// clipped by the separated count, which is itself a cover.
long spanning_count(const DnOracle& d, double eps, int n);
// Greedy maximal (n, eps)-separated subset, insertion in index order.
long separated_count(const DnOracle& d, double eps, int n);
std::vector<std::size_t> separated_subset(const DnOracle& d, double eps, int n);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  int first_n = 0;
  int last_n = 0;
  double max_residual = 0.0;
};

// Least squares of log(count) against n over the longest run of trailing
// n values (at least 3) that stays within `linear_tol` of its own line.
// When the last three counts do not increase, the run also stops where
// the counts last grew.
SlopeFit fit_growth(const std::vector<int>& n, const std::vector<long>& counts,
                    double linear_tol = 0.15);

struct EntropyReport {
  std::string system;
  std::vector<double> eps;  // decreasing
  std::vector<int> n;       // increasing
  std::vector<std::vector<long>> span, sep;  // [eps][n]
  std::vector<SlopeFit> span_fit, sep_fit;
  double h_estimate = 0.0;
  bool slopes_increasing = false;
  double unbounded_threshold = std::log(4.0);
  std::string verdict;
  std::vector<std::string> notes;

  std::vector<CapacityCounts> flat() const;
};

EntropyReport fit_entropy(const std::vector<CapacityCounts>& counts,
                          double unbounded_threshold = std::log(4.0));

// Counts on every (eps, n) cell and the fit.
EntropyReport count_and_fit(const DnOracle& d, const std::vector<double>& eps,
                            const std::vector<int>& n, const std::string& system = {},
                            double unbounded_threshold = std::log(4.0));

std::vector<double> geometric_schedule(double eps0, int levels);

struct EntropyRun {
  EntropyReport report;
  std::size_t trajectories = 0;
  bool budget_exceeded = false;
  int truncation = 0;
};

// generate_trajectories -> d_n table -> counts -> fit.
EntropyRun estimate_entropy(const PiecewiseSystem& sys, const std::vector<Vec2>& seeds,
                            const BranchPolicy& policy, double dt, const std::vector<double>& eps,
                            const std::vector<int>& n,
                            double unbounded_threshold = std::log(4.0),
                            const Tolerances& tol = {});

// Rejects eps at or below four times the truncation bound.
void check_eps_schedule(const std::vector<double>& eps, double resolution);

struct PowerReport {
  int m = 1;
  double slope_f = 0.0;   // under F_1
  double slope_fm = 0.0;  // under F_1^m
  double ratio = NAN;     // slope_fm / slope_f; NaN when slope_f ~ 0
  bool degenerate = false;
  std::vector<long> counts_f, counts_fm;
};

// `d1` measures with F_1, `dm` with F_1^m on the same set.
PowerReport power_check(const DnOracle& d1, const DnOracle& dm, int m, double eps,
                        const std::vector<int>& n);

// The sub-oracle viewing a subset of another oracle's points.
class SubsetOracle final : public DnOracle {
 public:
  SubsetOracle(const DnOracle& full, std::vector<std::size_t> idx)
      : full_(full), idx_(std::move(idx)) {}
  std::size_t size() const override { return idx_.size(); }
  int max_n() const override { return full_.max_n(); }
  double dn(std::size_t a, std::size_t b, int n) const override {
    return full_.dn(idx_[a], idx_[b], n);
  }
  double resolution() const override { return full_.resolution(); }

 private:
  const DnOracle& full_;
  std::vector<std::size_t> idx_;
};

struct RestrictionReport {
  bool passed = true;
  double slope_sub = 0.0;
  double slope_full = 0.0;
  std::size_t cell_violations = 0;  // cells where a greedy count of the subset is larger
};

RestrictionReport restriction_check(const DnOracle& sub, const DnOracle& full,
                                    const std::vector<double>& eps, const std::vector<int>& n,
                                    double slope_tol = 0.02);

}  // namespace fpe
