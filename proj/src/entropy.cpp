#include "fpe/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

namespace fpe {

std::vector<std::size_t> separated_subset(const DnOracle& d, double eps, int n) {
  std::vector<std::size_t> sel;
  for (std::size_t j = 0; j < d.size(); ++j) {
    bool far = true;
    for (std::size_t s : sel) {
      if (d.dn(s, j, n) < eps) { far = false; break; }
    }
    if (far) sel.push_back(j);
  }
  return sel;
}

long separated_count(const DnOracle& d, double eps, int n) {
  return static_cast<long>(separated_subset(d, eps, n).size());
}

long spanning_count(const DnOracle& d, double eps, int n) {
  const std::size_t N = d.size();
  if (N == 0) return 0;
  std::vector<std::vector<std::uint32_t>> nb(N);
  for (std::size_t i = 0; i < N; ++i) nb[i].push_back(static_cast<std::uint32_t>(i));
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i + 1; j < N; ++j) {
      if (d.dn(i, j, n) < eps) {
        nb[i].push_back(static_cast<std::uint32_t>(j));
        nb[j].push_back(static_cast<std::uint32_t>(i));
      }
    }
  }
  // Exact greedy with a lazily refreshed heap: coverage only ever drops, so
  // an entry whose stored value still matches the live value is the true
  // argmax (ties resolved by the smaller index through the key order).
  std::vector<long> cover(N);
  for (std::size_t i = 0; i < N; ++i) cover[i] = static_cast<long>(nb[i].size());
  using Key = std::pair<long, long>;  // (coverage, -index), max-heap
  std::priority_queue<Key> heap;
  for (std::size_t i = 0; i < N; ++i) heap.push({cover[i], -static_cast<long>(i)});
  std::vector<char> covered(N, 0);
  std::size_t remaining = N;
  long picks = 0;
  while (remaining > 0) {
    const auto [c, negi] = heap.top();
    heap.pop();
    const std::size_t i = static_cast<std::size_t>(-negi);
    if (c != cover[i]) {
      heap.push({cover[i], negi});
      continue;
    }
    ++picks;
    for (std::uint32_t j : nb[i]) {
      if (covered[j]) continue;
      covered[j] = 1;
      --remaining;
      for (std::uint32_t k : nb[j]) --cover[k];
    }
  }
  // A maximal separated set also covers; never report more than it.
  return std::min(picks, separated_count(d, eps, n));
}

SlopeFit fit_growth(const std::vector<int>& n, const std::vector<long>& counts, double linear_tol) {
  if (n.size() != counts.size() || n.size() < 3)
    throw Error(ErrorCode::InsufficientData, "need at least three n values");
  auto fit = [&](std::size_t lo) {
    const std::size_t hi = n.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) {
      const double x = n[i], y = std::log(static_cast<double>(std::max(1L, counts[i])));
      sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    SlopeFit f;
    const double den = k * sxx - sx * sx;
    f.slope = den != 0 ? (k * sxy - sx * sy) / den : 0.0;
    f.intercept = (sy - f.slope * sx) / k;
    f.first_n = n[lo];
    f.last_n = n[hi - 1];
    for (std::size_t i = lo; i < hi; ++i) {
      const double y = std::log(static_cast<double>(std::max(1L, counts[i])));
      f.max_residual = std::max(f.max_residual, std::abs(y - (f.intercept + f.slope * n[i])));
    }
    return f;
  };
  // Saturated counts are a regime of their own: a tail that has stopped
  // growing is never averaged with the growth that led up to it.
  const std::size_t last = n.size() - 1;
  const bool flat_tail = counts[last] <= counts[last - 1] && counts[last - 1] <= counts[last - 2];
  SlopeFit best = fit(n.size() - 3);
  for (std::size_t lo = n.size() - 3; lo-- > 0;) {
    if (flat_tail && counts[lo + 1] > counts[lo]) break;
    SlopeFit f = fit(lo);
    if (f.max_residual > linear_tol) break;
    best = f;
  }
  return best;
}

std::vector<CapacityCounts> EntropyReport::flat() const {
  std::vector<CapacityCounts> out;
  for (std::size_t e = 0; e < eps.size(); ++e)
    for (std::size_t k = 0; k < n.size(); ++k) out.push_back({eps[e], n[k], span[e][k], sep[e][k]});
  return out;
}

EntropyReport fit_entropy(const std::vector<CapacityCounts>& counts, double unbounded_threshold) {
  std::map<double, std::map<int, CapacityCounts>, std::greater<>> grid;
  for (const auto& c : counts) grid[c.eps][c.n] = c;
  EntropyReport r;
  r.unbounded_threshold = unbounded_threshold;
  if (grid.empty()) throw Error(ErrorCode::InsufficientData, "no counts");
  for (const auto& [n, _] : grid.begin()->second) r.n.push_back(n);
  for (const auto& [eps, row] : grid) {
    if (row.size() < 3) throw Error(ErrorCode::InsufficientData, "need at least three n values per eps");
    std::vector<int> ns;
    std::vector<long> sp, se;
    for (const auto& [n, c] : row) {
      ns.push_back(n);
      sp.push_back(c.span_upper);
      se.push_back(c.sep_lower);
    }
    if (ns != r.n) throw Error(ErrorCode::InsufficientData, "ragged n grid");
    r.eps.push_back(eps);
    r.span.push_back(sp);
    r.sep.push_back(se);
    r.span_fit.push_back(fit_growth(ns, sp));
    r.sep_fit.push_back(fit_growth(ns, se));
  }
  r.h_estimate = std::max(0.0, r.sep_fit.back().slope);
  r.slopes_increasing = r.sep_fit.size() >= 2;
  for (std::size_t e = 1; e < r.sep_fit.size(); ++e)
    if (!(r.sep_fit[e].slope > r.sep_fit[e - 1].slope + 1e-9)) r.slopes_increasing = false;
  r.verdict = r.slopes_increasing && r.sep_fit.back().slope > unbounded_threshold
                  ? "UNBOUNDED-EVIDENCE"
                  : "FINITE";
  return r;
}

EntropyReport count_and_fit(const DnOracle& d, const std::vector<double>& eps,
                            const std::vector<int>& n, const std::string& system,
                            double unbounded_threshold) {
  if (n.size() < 3) throw Error(ErrorCode::InsufficientData, "need at least three n values");
  std::vector<CapacityCounts> counts;
  for (double e : eps)
    for (int k : n) counts.push_back({e, k, spanning_count(d, e, k), separated_count(d, e, k)});
  EntropyReport r = fit_entropy(counts, unbounded_threshold);
  r.system = system;
  return r;
}

std::vector<double> geometric_schedule(double eps0, int levels) {
  std::vector<double> e;
  for (int k = 0; k < levels; ++k) e.push_back(std::ldexp(eps0, -k));
  return e;
}

void check_eps_schedule(const std::vector<double>& eps, double resolution) {
  for (double e : eps)
    if (!(e > 4 * resolution))
      throw Error(ErrorCode::InvalidArgument,
                  "eps " + std::to_string(e) + " is not above 4x the truncation bound " +
                      std::to_string(resolution));
}

EntropyRun estimate_entropy(const PiecewiseSystem& sys, const std::vector<Vec2>& seeds,
                            const BranchPolicy& policy, double dt, const std::vector<double>& eps,
                            const std::vector<int>& n, double unbounded_threshold,
                            const Tolerances& tol) {
  if (n.size() < 3) throw Error(ErrorCode::InsufficientData, "need at least three n values");
  const auto set = generate_trajectories(sys, seeds, policy, dt, tol);
  auto cfg = TrajectoryMetricConfig::for_set(set.trajectories, sys.domain.diameter());
  cfg.window = policy.horizon;
  cfg.quad_dt = dt;
  const int n_max = *std::max_element(n.begin(), n.end());
  DenseDnTable table(set.trajectories, cfg, n_max);
  check_eps_schedule(eps, table.resolution());
  EntropyRun run;
  run.report = count_and_fit(table, eps, n, sys.name, unbounded_threshold);
  run.trajectories = set.trajectories.size();
  run.budget_exceeded = set.budget_exceeded;
  run.truncation = table.truncation();
  if (set.budget_exceeded) run.report.notes.push_back("branch budget exceeded; counts use a partial set");
  return run;
}

PowerReport power_check(const DnOracle& d1, const DnOracle& dm, int m, double eps,
                        const std::vector<int>& n) {
  PowerReport r;
  r.m = m;
  for (int k : n) {
    r.counts_f.push_back(separated_count(d1, eps, k));
    r.counts_fm.push_back(separated_count(dm, eps, k));
  }
  r.slope_f = fit_growth(n, r.counts_f, 1e9).slope;
  r.slope_fm = fit_growth(n, r.counts_fm, 1e9).slope;
  if (std::abs(r.slope_f) < 1e-9) {
    r.degenerate = true;
    r.ratio = NAN;
  } else {
    r.ratio = r.slope_fm / r.slope_f;
  }
  return r;
}

RestrictionReport restriction_check(const DnOracle& sub, const DnOracle& full,
                                    const std::vector<double>& eps, const std::vector<int>& n,
                                    double slope_tol) {
  RestrictionReport r;
  std::vector<CapacityCounts> cs, cf;
  for (double e : eps) {
    for (int k : n) {
      const long ss = separated_count(sub, e, k), sf = separated_count(full, e, k);
      const long ps = spanning_count(sub, e, k), pf = spanning_count(full, e, k);
      if (ss > sf || ps > pf) ++r.cell_violations;
      cs.push_back({e, k, ps, ss});
      cf.push_back({e, k, pf, sf});
    }
  }
  const auto rs = fit_entropy(cs), rf = fit_entropy(cf);
  r.slope_sub = rs.sep_fit.back().slope;
  r.slope_full = rf.sep_fit.back().slope;
  // Greedy counts are not monotone under restriction cell by cell, so only
  // the growth rates decide.
  r.passed = r.slope_sub <= r.slope_full + slope_tol;
  return r;
}

}  // namespace fpe
