#include "fpe/experiments.hpp"

#include <cmath>

namespace fpe {

SampledRunSetup default_sampled_setup(const std::string& system) {
  SampledRunSetup s;
  if (system == "bean") {
    s.seeds = {{-0.35, 0.0}};
    s.policy.horizon = 10;
    s.policy.max_branches = 20000;
    s.policy.slide_exit_grid = 0.1;
    s.dt = 0.1;
    s.eps = geometric_schedule(4.0, 5);
    s.n = {1, 2, 3};
  } else if (system == "node0") {
    for (double x : {-1.5, -0.5, 0.5, 1.5})
      for (double y : {-1.5, -0.5, 0.5, 1.5}) s.seeds.push_back({x, y});
    // Forward orbits never reach the escaping half of y = 0, so branching
    // only happens at seeds placed on it; all branches then fall into the node.
    for (double x : {-1.5, -1.0, -0.5}) s.seeds.push_back({x, 0.0});
    s.policy.horizon = 14;
    s.policy.max_branches = 4000;
    s.policy.freeze_on_domain_exit = true;
    s.dt = 0.05;
    s.eps = geometric_schedule(0.5, 3);
    s.n = {1, 2, 3, 4, 5};
  } else if (system == "smooth-rot") {
    for (int k = 1; k <= 12; ++k) {
      const double r = 0.15 * k, a = 0.7 * k;
      s.seeds.push_back({r * std::cos(a), r * std::sin(a)});
    }
    s.policy.horizon = 14;
    s.policy.max_branches = 4000;
    s.dt = 0.05;
    s.eps = geometric_schedule(0.5, 3);
    s.n = {1, 2, 3, 4, 5};
  } else {
    s.policy.horizon = 8;
    s.dt = 0.05;
    s.eps = geometric_schedule(1.0, 3);
    s.n = {1, 2, 3, 4};
  }
  return s;
}

EntropyReport symbolic_entropy(const ArcLibrary& lib, const std::vector<int>& symbols, int free_lo,
                               int free_hi, const std::vector<double>& eps,
                               const std::vector<int>& n, int step, const std::string& name) {
  if (free_hi < free_lo) throw Error(ErrorCode::InvalidArgument, "empty free slot range");
  int n_max = 1;
  for (int k : n) n_max = std::max(n_max, k);
  const ItineraryOracle o(lib, free_lo, all_itineraries(symbols, free_hi - free_lo + 1), n_max, step);
  return count_and_fit(o, eps, n, name);
}

ArcSet arc_itinerary_set(const ArcLibrary& lib, int W, std::size_t budget, const std::string& name) {
  ArcSet s;
  std::vector<int> symbols(lib.alpha);
  for (int k = 0; k < lib.alpha; ++k) symbols[k] = k;
  s.total = 1;
  for (int i = 0; i < W; ++i) s.total *= static_cast<std::size_t>(lib.alpha);
  if (W == 0) {
    SampledTrajectory g;
    g.system_name = name;
    g.dt = lib.dt;
    g.points = {Vec2{0, 0}};
    s.trajectories.push_back(g);
    return s;
  }
  std::vector<int> digits(W, 0);
  for (std::size_t idx = 0; idx < s.total; ++idx) {
    if (s.trajectories.size() >= budget) {
      s.budget_exceeded = true;
      break;
    }
    std::size_t r = idx;
    for (int i = W - 1; i >= 0; --i) {
      digits[i] = static_cast<int>(r % lib.alpha);
      r /= lib.alpha;
    }
    std::vector<int> it(2 * W, 0);
    for (int i = 0; i < W; ++i) it[W + i] = digits[i];
    s.trajectories.push_back(arc_trajectory(lib, it, W, name));
  }
  return s;
}

}  // namespace fpe
