#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fpe/psvf.hpp"

namespace fpe {

enum class Choice { FollowX, FollowY, Slide, ExitSlideToX, ExitSlideToY, StayFixed };

const char* to_string(Choice c);
std::optional<Choice> choice_from_string(const std::string& s);

struct BranchDecision {
  double time = 0.0;
  Vec2 at;
  Choice choice = Choice::StayFixed;
  int direction = 0;  // Slide only: +1 / -1 along the tangent (-grad_y, grad_x)
  int arc = -1;       // arc index, for trajectories assembled from an arc library
  bool operator==(const BranchDecision&) const = default;
};

// A global trajectory sampled at t_i = -W + i*dt, i = 0 .. 2W/dt.
struct SampledTrajectory {
  std::string system_name;
  double window = 0.0;
  double dt = 0.0;
  std::vector<Vec2> points;
  std::vector<BranchDecision> decisions;

  std::size_t samples_per_unit() const;
  std::size_t index_of(double t) const;  // nearest grid index
  Vec2 at(double t) const { return points[index_of(t)]; }
  double time_of(std::size_t i) const { return -window + static_cast<double>(i) * dt; }
};

std::size_t grid_count(double W, double dt);  // 2W/dt + 1

struct BranchPolicy {
  int max_branches = 20000;
  double slide_exit_grid = 0.1;
  double horizon = 8.0;  // the window W
  bool dedupe = true;
  // Number of distinct pasts explored per seed; 1 keeps the canonical past.
  int past_branches = 1;
  // Forward decisions after this time take the canonical continuation.
  double branch_until = std::numeric_limits<double>::infinity();
  // Optional veto for non-forced choices. A vetoed set falls back to its
  // canonical first element. `t` is the time within the half being built.
  std::function<bool(const BranchDecision&, const PointClass&)> allow;
  // Branches that leave the domain freeze at the exit point instead of
  // raising DomainExit.
  bool freeze_on_domain_exit = false;
};

// --- smooth pieces --------------------------------------------------------

struct SmoothEvent {
  double time = 0.0;
  Vec2 point;
  bool graze = false;  // tangential touch rather than a sign change
};

struct FlowResult {
  std::vector<Vec2> arc;  // samples at 0, dt, 2dt, ... up to the event or t_span
  std::optional<SmoothEvent> event;
};

// RK4 on one field, samples every dt; stops at the first crossing or graze
// of f = 0. `side` is the sign of f the arc lives on (0: inferred).
FlowResult flow_smooth(const PlanarField& field, Vec2 p, double t_span, double dt,
                       const SwitchingFunction& f, const Tolerances& tol = {},
                       std::optional<Rect> domain = std::nullopt, int side = 0);

// --- decisions ------------------------------------------------------------

struct Continuation {
  BranchDecision decision;
  Vec2 start;  // where the continuation begins (a slide may start a hair off p)
};

// Every admissible way to leave the switching point p forward in time.
std::vector<Continuation> step_filippov(const PiecewiseSystem& sys, Vec2 p, double t,
                                        const Tolerances& tol = {});

struct SlideResult {
  std::vector<Vec2> arc;                          // samples every dt from p
  std::vector<std::pair<double, Vec2>> exits;     // escaping segments only
  double duration = 0.0;                          // sliding time until the segment ends
  bool reached_boundary = false;
  Vec2 end;
};

// Slides from p in direction `direction` (+1 / -1, must agree with Z^s)
// until the segment ends or t_span elapses.
SlideResult slide_segment(const PiecewiseSystem& sys, Vec2 p, int direction, double dt,
                          double t_span, const BranchPolicy& policy, const Tolerances& tol = {});

// --- global trajectories --------------------------------------------------

struct TrajectorySet {
  std::vector<SampledTrajectory> trajectories;
  bool budget_exceeded = false;
  std::size_t frozen = 0;  // branches stopped at the domain edge
};

TrajectorySet generate_trajectories(const PiecewiseSystem& sys, const std::vector<Vec2>& seeds,
                                    const BranchPolicy& policy, double dt,
                                    const Tolerances& tol = {});

// One half-tree: forward orbits of `sys` from p over [0, T]. Leaves hold
// samples at 0, dt, ..., T. Exposed for return-map and witness searches.
struct HalfBranch {
  std::vector<Vec2> points;
  std::vector<BranchDecision> decisions;
};
struct HalfTree {
  std::vector<HalfBranch> leaves;
  bool budget_exceeded = false;
  std::size_t frozen = 0;
};
HalfTree expand_forward(const PiecewiseSystem& sys, Vec2 p, double T, double dt,
                        const BranchPolicy& policy, int max_leaves, double branch_until,
                        const Tolerances& tol = {});

struct InvariantReport {
  bool invariant = true;
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::optional<Vec2> first_violation;
};

InvariantReport check_invariant_set(const PiecewiseSystem& sys,
                                    const std::function<bool(Vec2, double)>& region,
                                    const std::vector<SampledTrajectory>& trajectories,
                                    const Tolerances& tol = {});

// Worker count: FPE_THREADS if set, else hardware concurrency.
unsigned worker_count();

}  // namespace fpe
