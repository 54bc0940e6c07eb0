#pragma once

#include <string>
#include <vector>

#include "fpe/entropy.hpp"
#include "fpe/systems.hpp"

namespace fpe {

// Settings of a sampled entropy run (generate -> d_n table -> counts).
struct SampledRunSetup {
  std::vector<Vec2> seeds;
  BranchPolicy policy;
  double dt = 0.1;
  std::vector<double> eps;
  std::vector<int> n;
};

// Defaults used by the CLI and the acceptance run.
//  bean:       one seed at the middle of J = [-0.6, -0.1], W = 10, budget
//              20000, eps = 4 / 2^k (k = 0..4), n = 1..3.
//  node0:      a seed grid plus seeds on the escaping segment, W = 14, n = 1..5.
//  smooth-rot: seeds on a spiral, W = 14, n = 1..5.
SampledRunSetup default_sampled_setup(const std::string& system);

// Symbolic counts for an arc library: the past is pinned to arc 0, slots
// [free_lo, free_hi] range over `symbols`, later slots repeat arc 0.
EntropyReport symbolic_entropy(const ArcLibrary& lib, const std::vector<int>& symbols, int free_lo,
                               int free_hi, const std::vector<double>& eps,
                               const std::vector<int>& n, int step = 1,
                               const std::string& name = "arcs");

// Every forward itinerary over W unit slots (past pinned to arc 0) as
// sampled trajectories, at most `budget` of them.
struct ArcSet {
  std::vector<SampledTrajectory> trajectories;
  std::size_t total = 0;  // alpha^W
  bool budget_exceeded = false;
};
ArcSet arc_itinerary_set(const ArcLibrary& lib, int W, std::size_t budget,
                         const std::string& name = "rosette");

}  // namespace fpe
