#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fpe/entropy.hpp"
#include "fpe/integrate.hpp"
#include "fpe/traj_space.hpp"

namespace fpe {

// ----------------------------------------------------------------- arcs

// Closed unit-duration arcs through the origin, sampled every dt.
struct ArcLibrary {
  int alpha = 0;
  double dt = 1e-3;
  std::vector<std::vector<Vec2>> arcs;     // alpha arcs, 1/dt + 1 samples each
  std::vector<double> durations;           // measured before normalisation, times scale
  std::vector<std::vector<double>> cost;   // cost[j][k] = int_0^1 |I_j - I_k|
  double mu = 0.0;                         // min off-diagonal cost
  bool uniform = true;                     // all off-diagonal costs agree to 1e-6 rel.

  int samples_per_unit() const;
  // Library resampled on a coarser grid; dt_new must be a multiple of dt.
  ArcLibrary resampled(double dt_new) const;
  ArcLibrary restricted(const std::vector<int>& keep) const;
};

struct RosetteBuild {
  int alpha = 0;
  double compression = 1.0;  // y-scale applied to the base pair for alpha >= 4
  double time_scale = 1.0;   // field multiplier that makes each arc last 1
  PiecewiseSystem base;      // normalised base pair on the ray at angle 0
  std::vector<PiecewiseSystem> rays;  // one local system per sector boundary
  ArcLibrary arcs;
  PlanarField sector_field;  // piecewise field of the whole rosette
};

RosetteBuild build_rosette(int alpha, double dt = 1e-3);

struct Figure8Build {
  PiecewiseSystem system;
  ArcLibrary arcs;
};
Figure8Build build_figure8(double dt = 1e-3);

// Trajectory that runs arc itinerary[j] on [lo + j, lo + j + 1]; lo = -W.
SampledTrajectory arc_trajectory(const ArcLibrary& lib, const std::vector<int>& itinerary,
                                 int W, const std::string& system_name = "rosette");

// Recovers the arc index of every unit slot of an arc trajectory.
std::vector<int> decode_arcs(const ArcLibrary& lib, const SampledTrajectory& g);

// Exact d_n on itinerary sets: all itineraries share slots outside
// [first_slot, first_slot + width) and range freely inside.
class ItineraryOracle final : public DnOracle {
 public:
  ItineraryOracle(const ArcLibrary& lib, int first_slot, std::vector<std::vector<int>> items,
                  int n_max, int step = 1);

  std::size_t size() const override { return items_.size(); }
  int max_n() const override { return n_max_; }
  double dn(std::size_t a, std::size_t b, int n) const override;

  const std::vector<int>& item(std::size_t i) const { return items_[i]; }
  int first_slot() const { return first_; }

 private:
  std::vector<std::vector<int>> items_;
  std::vector<std::uint64_t> packed_;
  std::vector<std::vector<double>> cost_;
  std::vector<std::vector<double>> mask_table_;  // [n-1][mask], uniform costs only
  double mu_ = 0.0;
  bool uniform_ = true;
  int first_ = 0, width_ = 0, n_max_ = 1, step_ = 1;
};

// Every itinerary over `width` free slots using the given symbols, free
// slots ranging over `symbols`, in lexicographic order.
std::vector<std::vector<int>> all_itineraries(const std::vector<int>& symbols, int width);

// ----------------------------------------------------------------- bean

struct BeanBuild {
  PiecewiseSystem system;
  std::function<bool(Vec2, double)> in_K;  // K thickened by the second argument
  double sigma_e_lo = -1.0 / std::sqrt(2.0), sigma_e_hi = 0.0;
};
BeanBuild build_bean();

PiecewiseSystem build_node0();
PiecewiseSystem build_smooth_rot();

// Registry: bean, figure8, node0, smooth-rot, rosette:<alpha>.
PiecewiseSystem system_by_name(const std::string& name);
std::vector<std::string> list_systems();

// ----------------------------------------------------------------- escapes

struct EscapePoint {
  double time = 0.0;
  Vec2 point;
  int destination = 0;  // +1 into f > 0, -1 into f < 0
};

bool in_closure_escaping(const PiecewiseSystem& sys, Vec2 p, const Tolerances& tol = {});

std::vector<EscapePoint> escape_points(const PiecewiseSystem& sys, const SampledTrajectory& g,
                                       const Tolerances& tol = {});

struct EscapeStructure {
  double J_lo = -0.6, J_hi = -0.1;  // x-interval on y = 0
  double tau_min = 0.0, tau_max = 0.0;
  int k = 0;
  int rescale_c = 1;
  int destination = -1;  // the family's escapes all go this way

  bool in_J(Vec2 p, double pad = 1e-9) const {
    return p.x >= J_lo - pad && p.x <= J_hi + pad && std::abs(p.y) <= 1e-6;
  }
  double theta(Vec2 p) const { return (p.x - J_lo) / (J_hi - J_lo); }
};

// A view of g shifted by a real time offset.
struct RealShift {
  const SampledTrajectory* base = nullptr;
  double offset = 0.0;
};

struct ReturnResult {
  RealShift image;
  double tau = 0.0;
  EscapePoint next;
};

ReturnResult return_map_P(const PiecewiseSystem& sys, const EscapeStructure& esc,
                          const RealShift& g, const Tolerances& tol = {});

struct Itinerary {
  std::vector<double> symbols;
  bool integral = false;
};

Itinerary itinerary_code(const PiecewiseSystem& sys, const EscapeStructure& esc,
                         const RealShift& g, int depth, const Tolerances& tol = {});
Itinerary itinerary_code(const ArcLibrary& lib, const SampledTrajectory& g, int first_slot,
                         int depth);

// Policy that keeps a bean trajectory inside the family S of the escape
// structure: at time 0 and at every later escape it leaves J downwards.
BranchPolicy bean_family_policy(const PiecewiseSystem& sys, const EscapeStructure& esc,
                                double W, double exit_grid, int max_branches);

// Samples the family, measures tau and shrinks J until the return times fit
// inside one unit interval (k-1, k).
EscapeStructure make_escape_structure(const PiecewiseSystem& sys, double J_lo, double J_hi,
                                      int samples = 24, double exit_grid = 0.1,
                                      double dt = 1e-3);

std::vector<SampledTrajectory> bean_family(const PiecewiseSystem& sys, const EscapeStructure& esc,
                                           int seeds, double W, double dt, double exit_grid,
                                           std::size_t max_total);

PiecewiseSystem rescale_system(const PiecewiseSystem& sys, int c);

// H: trajectories of sys -> trajectories of the rescaled system (slowed by c).
SampledTrajectory dilate(const SampledTrajectory& g, int c);

struct Witness {
  double x = 0.0;
  bool found = false;
  double return_time = 0.0;
  std::vector<BranchDecision> decisions;
};

struct WitnessReport {
  bool precondition_ok = true;
  std::string precondition_message;
  std::vector<Witness> points;
  bool all_found = false;
  double M = 0.0;
  int c = 0;
};

WitnessReport verify_sufficient_conditions(const PiecewiseSystem& sys, double J_lo, double J_hi,
                                           int samples, double horizon, double dt = 1e-2,
                                           double exit_grid = 0.1, const Tolerances& tol = {});

}  // namespace fpe
