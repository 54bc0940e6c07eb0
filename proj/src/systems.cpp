#include "fpe/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fpe {

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 rotate(Vec2 p, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

double arc_cost(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double dt) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double w = (k == 0 || k + 1 == a.size()) ? 0.5 : 1.0;
    s += w * dist(a[k], b[k]);
  }
  return s * dt;
}

void fill_costs(ArcLibrary& lib) {
  const int a = lib.alpha;
  lib.cost.assign(a, std::vector<double>(a, 0.0));
  double lo = INFINITY, hi = 0.0;
  for (int j = 0; j < a; ++j)
    for (int k = j + 1; k < a; ++k) {
      const double c = arc_cost(lib.arcs[j], lib.arcs[k], lib.dt);
      lib.cost[j][k] = lib.cost[k][j] = c;
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
  lib.mu = a >= 2 ? lo : 0.0;
  lib.uniform = a < 2 || hi - lo <= 1e-6 * hi;
}

// One forward branch from the origin on [0, 1], taking `first` at t = 0 and
// the canonical continuation afterwards.
std::vector<Vec2> unit_arc(const PiecewiseSystem& sys, double dt, std::optional<Choice> first) {
  BranchPolicy pol;
  pol.max_branches = 1;
  if (first)
    pol.allow = [c = *first](const BranchDecision& d, const PointClass&) {
      return d.time > 0 || d.choice == c;
    };
  auto tree = expand_forward(sys, {0.0, 0.0}, 1.0, dt, pol, 1, 0.0);
  return tree.leaves.front().points;
}

// Duration of the closed orbit through the origin built from smooth pieces
// only: follow the fields from event to event until the origin is reached.
double loop_duration(const PiecewiseSystem& sys, Which first, double dt) {
  const Tolerances tol;
  Vec2 p{0.0, 0.0};
  double total = 0.0;
  Which w = first;
  for (int piece = 0; piece < 8; ++piece) {
    auto r = flow_smooth(sys.field(w), p, 50.0, dt, sys.f, tol, sys.domain, w == Which::X ? 1 : -1);
    if (!r.event) throw Error(ErrorCode::InvalidArgument, "arc does not return to the switching curve");
    total += r.event->time;
    p = r.event->point;
    if (norm(p) < 1e-6) return total;
    w = w == Which::X ? Which::Y : Which::X;
  }
  throw Error(ErrorCode::InvalidArgument, "arc does not close at the origin");
}

}  // namespace

// ------------------------------------------------------------------ arcs

int ArcLibrary::samples_per_unit() const { return static_cast<int>(std::lround(1.0 / dt)); }

ArcLibrary ArcLibrary::resampled(double dt_new) const {
  const double r = dt_new / dt;
  const long step = std::lround(r);
  if (step < 1 || std::abs(r - static_cast<double>(step)) > 1e-9 * r)
    throw Error(ErrorCode::InvalidArgument, "new step must be a multiple of the library step");
  ArcLibrary out = *this;
  out.dt = dt_new;
  for (auto& a : out.arcs) {
    std::vector<Vec2> s;
    for (std::size_t k = 0; k < a.size(); k += static_cast<std::size_t>(step)) s.push_back(a[k]);
    a = std::move(s);
  }
  fill_costs(out);
  return out;
}

ArcLibrary ArcLibrary::restricted(const std::vector<int>& keep) const {
  ArcLibrary out;
  out.dt = dt;
  out.alpha = static_cast<int>(keep.size());
  for (int k : keep) {
    out.arcs.push_back(arcs.at(k));
    out.durations.push_back(durations.at(k));
  }
  fill_costs(out);
  return out;
}

RosetteBuild build_rosette(int alpha, double dt) {
  if (alpha < 2) throw Error(ErrorCode::InvalidArgument, "alpha must be at least 2");
  RosetteBuild rb;
  rb.alpha = alpha;
  // For alpha >= 4 the lens (half-angle 45 degrees) would spill out of its
  // pi/alpha wedge; flatten it in y so that it fits with margin.
  rb.compression = alpha >= 4 ? std::tan(kPi / alpha) / 2.0 : 1.0;
  const double s = rb.compression;
  const Polynomial2 one = Polynomial2::constant(1.0), x = Polynomial2::x();
  const Rect dom{-2.2, 2.2, -2.2, 2.2};
  PiecewiseSystem raw("rosette-raw", PlanarField(one, (one - x) * s), PlanarField(-one, (one - x) * s),
                      SwitchingFunction(Polynomial2::y()), dom);
  rb.time_scale = loop_duration(raw, Which::X, 1e-3);
  const double c = rb.time_scale;
  rb.base = PiecewiseSystem("rosette:" + std::to_string(alpha), PlanarField(one * c, (one - x) * (s * c)),
                            PlanarField(one * -c, (one - x) * (s * c)), SwitchingFunction(Polynomial2::y()),
                            dom);

  ArcLibrary& lib = rb.arcs;
  lib.alpha = alpha;
  lib.dt = dt;
  const auto base_arc = unit_arc(rb.base, dt, std::nullopt);
  const double dur = loop_duration(rb.base, Which::X, std::min(dt, 1e-3));
  for (int j = 0; j < alpha; ++j) {
    std::vector<Vec2> a(base_arc.size());
    const double ang = 2 * kPi * j / alpha;
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = rotate(base_arc[k], ang);
    a.front() = a.back() = Vec2{0.0, 0.0};
    lib.arcs.push_back(std::move(a));
    lib.durations.push_back(dur);
  }
  fill_costs(lib);

  // Sector 2j holds X rotated by 2 pi j / alpha, sector 2j+1 holds Y rotated
  // by 2 pi (j+1) / alpha, so each lens sits across its own even ray.
  const PlanarField X = rb.base.X, Y = rb.base.Y;
  std::vector<PlanarField> sector;
  for (int j = 0; j < alpha; ++j) {
    sector.push_back(X.rotated(2 * kPi * j / alpha));
    sector.push_back(Y.rotated(2 * kPi * (j + 1) / alpha));
  }
  const double wedge = kPi / alpha;
  rb.sector_field = PlanarField([sector, wedge](Vec2 p) {
    double th = std::atan2(p.y, p.x);
    if (th < 0) th += 2 * kPi;
    int k = static_cast<int>(th / wedge);
    k = std::clamp(k, 0, static_cast<int>(sector.size()) - 1);
    return sector[k](p);
  });
  for (int r = 0; r < 2 * alpha; ++r) {
    const double phi = r * wedge;
    Polynomial2 f = Polynomial2::x() * -std::sin(phi) + Polynomial2::y() * std::cos(phi);
    const PlanarField& ccw = sector[r];
    const PlanarField& cw = sector[(r + 2 * alpha - 1) % (2 * alpha)];
    rb.rays.emplace_back("rosette:" + std::to_string(alpha) + "/ray" + std::to_string(r), ccw, cw,
                         SwitchingFunction(f), dom);
  }
  return rb;
}

Figure8Build build_figure8(double dt) {
  const Polynomial2 one = Polynomial2::constant(1.0), x = Polynomial2::x();
  const Polynomial2 v = x * 0.5 - x * x * x * 4.0;
  Figure8Build fb{PiecewiseSystem("figure8", PlanarField(one, v), PlanarField(-one, v),
                                  SwitchingFunction(Polynomial2::y()), Rect{-1, 1, -1, 1}),
                  {}};
  ArcLibrary& lib = fb.arcs;
  lib.alpha = 2;
  lib.dt = dt;
  for (Choice c : {Choice::FollowX, Choice::FollowY}) {
    auto a = unit_arc(fb.system, dt, c);
    lib.durations.push_back(loop_duration(fb.system, c == Choice::FollowX ? Which::X : Which::Y,
                                          std::min(dt, 1e-3)));
    lib.arcs.push_back(std::move(a));
  }
  fill_costs(lib);
  return fb;
}

std::vector<std::vector<int>> all_itineraries(const std::vector<int>& symbols, int width) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(width, 0);
  const std::size_t a = symbols.size();
  std::size_t total = 1;
  for (int i = 0; i < width; ++i) total *= a;
  out.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t r = idx;
    for (int i = width - 1; i >= 0; --i) {
      cur[i] = symbols[r % a];
      r /= a;
    }
    out.push_back(cur);
  }
  return out;
}

SampledTrajectory arc_trajectory(const ArcLibrary& lib, const std::vector<int>& itinerary, int W,
                                 const std::string& system_name) {
  if (static_cast<int>(itinerary.size()) != 2 * W)
    throw Error(ErrorCode::InvalidArgument, "itinerary must cover every unit slot of the window");
  const int m = lib.samples_per_unit();
  SampledTrajectory g;
  g.system_name = system_name;
  g.window = W;
  g.dt = lib.dt;
  g.points.reserve(static_cast<std::size_t>(2 * W) * m + 1);
  for (int j = 0; j < 2 * W; ++j) {
    const auto& arc = lib.arcs.at(itinerary[j]);
    g.points.insert(g.points.end(), arc.begin(), arc.begin() + m);
    g.decisions.push_back({static_cast<double>(j - W), Vec2{0, 0}, Choice::FollowX, 0, itinerary[j]});
  }
  g.points.push_back(lib.arcs.at(itinerary.back()).back());
  return g;
}

std::vector<int> decode_arcs(const ArcLibrary& lib, const SampledTrajectory& g) {
  const int m = lib.samples_per_unit();
  const int slots = static_cast<int>((g.points.size() - 1) / m);
  std::vector<int> out;
  for (int j = 0; j < slots; ++j) {
    int best = -1;
    double bd = INFINITY;
    for (int k = 0; k < lib.alpha; ++k) {
      double s = 0.0;
      for (int i = 0; i <= m; ++i) s += dist(g.points[j * m + i], lib.arcs[k][i]);
      if (s < bd) { bd = s; best = k; }
    }
    out.push_back(best);
  }
  return out;
}

// ------------------------------------------------------------ itineraries

namespace {
struct NibbleLut {
  std::uint8_t v[256];
  NibbleLut() {
    for (int b = 0; b < 256; ++b) v[b] = ((b & 0x0F) ? 1 : 0) | ((b & 0xF0) ? 2 : 0);
  }
};
const NibbleLut kNibble;

std::uint32_t diff_mask(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ b;
  std::uint32_t m = 0;
  for (int byte = 0; x; ++byte, x >>= 8) m |= static_cast<std::uint32_t>(kNibble.v[x & 0xFF]) << (2 * byte);
  return m;
}
}  // namespace

ItineraryOracle::ItineraryOracle(const ArcLibrary& lib, int first_slot,
                                 std::vector<std::vector<int>> items, int n_max, int step)
    : items_(std::move(items)), cost_(lib.cost), mu_(lib.mu), uniform_(lib.uniform),
      first_(first_slot), n_max_(n_max), step_(step) {
  width_ = items_.empty() ? 0 : static_cast<int>(items_.front().size());
  if (n_max < 1 || step < 1) throw Error(ErrorCode::InvalidArgument, "n_max and step must be positive");
  const bool packable = width_ <= 16 && lib.alpha <= 16;
  if (uniform_ && packable) {
    packed_.reserve(items_.size());
    for (const auto& it : items_) {
      std::uint64_t p = 0;
      for (int s = 0; s < width_; ++s) p |= static_cast<std::uint64_t>(it[s]) << (4 * s);
      packed_.push_back(p);
    }
    const std::size_t masks = std::size_t{1} << width_;
    mask_table_.assign(n_max, std::vector<double>(masks, 0.0));
    for (int n = 1; n <= n_max; ++n) {
      for (std::size_t msk = 0; msk < masks; ++msk) {
        double best = 0.0;
        for (int i = 0; i < n; ++i) {
          double sum = 0.0;  // dyadic, hence exact
          for (int s = 0; s < width_; ++s)
            if (msk >> s & 1) sum += std::ldexp(1.0, -std::abs(first_ + s - i * step_));
          best = std::max(best, sum);
        }
        mask_table_[n - 1][msk] = best;
      }
    }
  } else {
    uniform_ = false;
  }
}

double ItineraryOracle::dn(std::size_t a, std::size_t b, int n) const {
  if (n < 1 || n > n_max_) throw Error(ErrorCode::WindowExceeded, "n outside the oracle range");
  if (a == b) return 0.0;
  if (uniform_) return mu_ * mask_table_[n - 1][diff_mask(packed_[a], packed_[b])];
  const auto& A = items_[a];
  const auto& B = items_[b];
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int s = 0; s < width_; ++s)
      if (A[s] != B[s]) sum += std::ldexp(cost_[A[s]][B[s]], -std::abs(first_ + s - i * step_));
    best = std::max(best, sum);
  }
  return best;
}

// ------------------------------------------------------------------ bean etc

BeanBuild build_bean() {
  const Polynomial2 one = Polynomial2::constant(1.0), x = Polynomial2::x();
  const Polynomial2 x3 = x * x * x;
  BeanBuild b{PiecewiseSystem("bean", PlanarField(one, x * -2.0),
                              PlanarField(one * -2.0, x3 * -4.0 + x * 2.0),
                              SwitchingFunction(Polynomial2::y()), Rect{-1.2, 1.2, -1.2, 1.2}),
              {}};
  b.in_K = [](Vec2 p, double th) {
    const double x2 = p.x * p.x;
    return p.x >= -1 - th && p.x <= 1 + th && p.y >= x2 * x2 / 2 - x2 / 2 - th &&
           p.y <= 1 - x2 + th;
  };
  return b;
}

PiecewiseSystem build_node0() {
  const Polynomial2 one = Polynomial2::constant(1.0), x = Polynomial2::x(), y = Polynomial2::y();
  return PiecewiseSystem("node0", PlanarField(one, -x), PlanarField(-x, -one - y),
                         SwitchingFunction(y), Rect{-2, 2, -2, 2});
}

PiecewiseSystem build_smooth_rot() {
  const Polynomial2 x = Polynomial2::x(), y = Polynomial2::y();
  return PiecewiseSystem("smooth-rot", PlanarField(-y, x), PlanarField(-y, x), SwitchingFunction(y),
                         Rect{-2, 2, -2, 2});
}

PiecewiseSystem system_by_name(const std::string& name) {
  if (name == "bean") return build_bean().system;
  if (name == "figure8") return build_figure8().system;
  if (name == "node0") return build_node0();
  if (name == "smooth-rot") return build_smooth_rot();
  if (name.rfind("rosette:", 0) == 0) {
    const std::string a = name.substr(8);
    if (a.empty() || a.find_first_not_of("0123456789") != std::string::npos || a.size() > 3)
      throw Error(ErrorCode::InvalidArgument, "bad rosette order in '" + name + "'");
    const int alpha = std::stoi(a);
    if (alpha < 2) throw Error(ErrorCode::InvalidArgument, "rosette order must be at least 2");
    return build_rosette(alpha).base;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown system '" + name + "'");
}

std::vector<std::string> list_systems() {
  return {"bean", "figure8", "node0", "smooth-rot", "rosette:<alpha>"};
}

// ------------------------------------------------------------------ escapes

bool in_closure_escaping(const PiecewiseSystem& sys, Vec2 p, const Tolerances& tol) {
  const PointClass c = classify_point(sys, p, tol);
  if (c.region == Region::Escaping) return true;
  if (!c.tangency() && c.region != Region::Degenerate) return false;
  const Vec2 g = sys.f.grad(p);
  const Vec2 T = Vec2{-g.y, g.x} / norm(g);
  const double d = 1e-7 * sys.domain.diameter();
  for (int dir : {1, -1}) {
    Vec2 q = p + T * (d * dir);
    q -= g * (sys.f(q) / dot(g, g));
    if (classify_point(sys, q, tol).region == Region::Escaping) return true;
  }
  return false;
}

std::vector<EscapePoint> escape_points(const PiecewiseSystem& sys, const SampledTrajectory& g,
                                       const Tolerances& tol) {
  std::vector<EscapePoint> out;
  for (const auto& d : g.decisions) {
    if (d.time < 0) continue;  // past decisions are recorded in reversed time
    int dest = 0;
    if (d.choice == Choice::FollowX || d.choice == Choice::ExitSlideToX) dest = 1;
    if (d.choice == Choice::FollowY || d.choice == Choice::ExitSlideToY) dest = -1;
    if (dest == 0 || !in_closure_escaping(sys, d.at, tol)) continue;
    out.push_back({d.time, d.at, dest});
  }
  return out;
}

ReturnResult return_map_P(const PiecewiseSystem& sys, const EscapeStructure& esc, const RealShift& g,
                          const Tolerances& tol) {
  const auto esc_pts = escape_points(sys, *g.base, tol);
  bool at_escape = false;
  for (const auto& e : esc_pts)
    if (std::abs(e.time - g.offset) <= 1e-9 && esc.in_J(e.point)) at_escape = true;
  if (!at_escape)
    throw Error(ErrorCode::InvalidArgument, "time 0 of the view is not an escape point in J");
  for (const auto& e : esc_pts) {
    if (e.time > g.offset + 1e-9) {
      ReturnResult r;
      r.tau = e.time - g.offset;
      r.image = {g.base, e.time};
      r.next = e;
      return r;
    }
  }
  throw Error(ErrorCode::NoReturnInWindow, "no further escape inside the window");
}

Itinerary itinerary_code(const PiecewiseSystem& sys, const EscapeStructure& esc, const RealShift& g,
                         int depth, const Tolerances& tol) {
  Itinerary it;
  RealShift cur = g;
  const auto pts = escape_points(sys, *g.base, tol);
  for (int j = 0; j < depth; ++j) {
    auto e = std::find_if(pts.begin(), pts.end(),
                          [&](const EscapePoint& p) { return std::abs(p.time - cur.offset) <= 1e-9; });
    if (e == pts.end()) throw Error(ErrorCode::NoReturnInWindow, "escape chain ends inside the window");
    it.symbols.push_back(esc.theta(e->point));
    if (j + 1 < depth) cur = return_map_P(sys, esc, cur, tol).image;
  }
  return it;
}

Itinerary itinerary_code(const ArcLibrary& lib, const SampledTrajectory& g, int first_slot, int depth) {
  const auto arcs = decode_arcs(lib, g);
  const int W = static_cast<int>(std::lround(g.window));
  Itinerary it;
  it.integral = true;
  for (int j = 0; j < depth; ++j) {
    const int idx = first_slot + j + W;
    if (idx < 0 || idx >= static_cast<int>(arcs.size()))
      throw Error(ErrorCode::NoReturnInWindow, "itinerary deeper than the window");
    it.symbols.push_back(arcs[idx]);
  }
  return it;
}

BranchPolicy bean_family_policy(const PiecewiseSystem& sys, const EscapeStructure& esc, double W,
                                double exit_grid, int max_branches) {
  BranchPolicy pol;
  pol.horizon = W;
  pol.slide_exit_grid = exit_grid;
  pol.max_branches = max_branches;
  pol.allow = [sys, esc, exit_grid](const BranchDecision& d, const PointClass&) {
    const bool on_e = in_closure_escaping(sys, d.at);
    switch (d.choice) {
      case Choice::FollowX:
      case Choice::ExitSlideToX:
        return !on_e;
      case Choice::FollowY:
      case Choice::ExitSlideToY:
        return !on_e || esc.in_J(d.at);
      case Choice::Slide: {
        if (d.time == 0.0) return false;  // the seed itself is the first escape
        if (!on_e || d.at.x > esc.J_hi) return true;
        // Keep sliding only while the next exit candidate is still inside J.
        const double v = std::abs(sliding_field(sys, d.at).x);
        return d.at.x - 1.05 * v * exit_grid >= esc.J_lo;
      }
      default:
        return true;
    }
  };
  return pol;
}

std::vector<SampledTrajectory> bean_family(const PiecewiseSystem& sys, const EscapeStructure& esc,
                                           int seeds, double W, double dt, double exit_grid,
                                           std::size_t max_total) {
  std::vector<Vec2> pts;
  for (int i = 0; i < seeds; ++i)
    pts.push_back({esc.J_lo + (esc.J_hi - esc.J_lo) * (i + 0.5) / seeds, 0.0});
  const int per_seed = static_cast<int>(std::max<std::size_t>(1, max_total / std::max(1, seeds)));
  auto pol = bean_family_policy(sys, esc, W, exit_grid, per_seed);
  auto set = generate_trajectories(sys, pts, pol, dt);
  // Keep trajectories whose every forward escape is a downward one in J.
  std::vector<SampledTrajectory> out;
  for (auto& g : set.trajectories) {
    bool ok = true;
    for (const auto& e : escape_points(sys, g))
      if (!(esc.in_J(e.point) && e.destination == esc.destination)) ok = false;
    if (ok && out.size() < max_total) out.push_back(std::move(g));
  }
  return out;
}

EscapeStructure make_escape_structure(const PiecewiseSystem& sys, double J_lo, double J_hi,
                                      int samples, double exit_grid, double dt) {
  EscapeStructure esc;
  esc.J_lo = J_lo;
  esc.J_hi = J_hi;
  for (int round = 0; round < 40; ++round) {
    if (esc.J_hi - esc.J_lo < 0.02) break;
    for (double x : {esc.J_lo, esc.J_hi})
      if (classify_point(sys, {x, 0.0}).region != Region::Escaping)
        throw Error(ErrorCode::InvalidArgument, "J is not inside the escaping region");
    const auto fam = bean_family(sys, esc, samples, 5.0, dt, exit_grid, 4096);
    double lo = INFINITY, hi = 0.0;
    for (const auto& g : fam) {
      const auto e = escape_points(sys, g);
      if (e.size() < 2) continue;
      lo = std::min(lo, e[1].time - e[0].time);
      hi = std::max(hi, e[1].time - e[0].time);
    }
    if (lo <= hi && std::floor(lo) == std::floor(hi) && lo > std::floor(lo)) {
      esc.tau_min = lo;
      esc.tau_max = hi;
      esc.k = static_cast<int>(std::floor(lo)) + 1;
      esc.rescale_c = 1;
      return esc;
    }
    const double cut = 0.05 * (esc.J_hi - esc.J_lo);
    esc.J_lo += cut;
    esc.J_hi -= cut;
  }
  throw Error(ErrorCode::InvalidArgument, "return times do not fit one unit interval for any sub-interval of J");
}

PiecewiseSystem rescale_system(const PiecewiseSystem& sys, int c) {
  if (c < 1) throw Error(ErrorCode::InvalidArgument, "rescale factor must be a positive integer");
  if (c == 1) return sys;
  return sys.scaled(1.0 / c);
}

SampledTrajectory dilate(const SampledTrajectory& g, int c) {
  SampledTrajectory out;
  out.system_name = g.system_name;
  out.window = g.window * c;
  out.dt = g.dt;
  const std::size_t n = grid_count(out.window, out.dt);
  out.points.resize(n);
  const double last = static_cast<double>(g.points.size() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    // out(t) = g(t / c): fractional source index i / c
    const double u = std::min(static_cast<double>(i) / c, last);
    const std::size_t k = static_cast<std::size_t>(u);
    const double w = u - static_cast<double>(k);
    out.points[i] = k + 1 < g.points.size() ? g.points[k] * (1 - w) + g.points[k + 1] * w : g.points[k];
  }
  for (auto d : g.decisions) {
    d.time *= c;
    out.decisions.push_back(d);
  }
  return out;
}

WitnessReport verify_sufficient_conditions(const PiecewiseSystem& sys, double J_lo, double J_hi,
                                           int samples, double horizon, double dt, double exit_grid,
                                           const Tolerances& tol) {
  WitnessReport rep;
  if (samples < 1) samples = 1;
  std::vector<double> xs;
  for (int i = 0; i < samples; ++i)
    xs.push_back(samples == 1 ? 0.5 * (J_lo + J_hi) : J_lo + (J_hi - J_lo) * i / (samples - 1));
  for (double x : xs) {
    if (classify_point(sys, {x, 0.0}, tol).region != Region::Escaping) {
      rep.precondition_ok = false;
      rep.precondition_message = "J contains the non-escaping point x=" + std::to_string(x);
      return rep;
    }
  }
  auto in_J = [&](Vec2 p) { return p.x >= J_lo - 1e-9 && p.x <= J_hi + 1e-9 && std::abs(p.y) <= 1e-6; };
  BranchPolicy pol;
  pol.slide_exit_grid = exit_grid;
  pol.allow = [](const BranchDecision& d, const PointClass&) {
    return d.time > 0 || d.choice == Choice::FollowX || d.choice == Choice::FollowY;
  };
  rep.M = INFINITY;
  rep.all_found = true;
  for (double x : xs) {
    Witness w;
    w.x = x;
    const auto tree = expand_forward(sys, {x, 0.0}, horizon, dt, pol, 512, horizon, tol);
    double best = INFINITY;
    const HalfBranch* best_leaf = nullptr;
    for (const auto& leaf : tree.leaves) {
      bool left = false;
      for (std::size_t k = 1; k < leaf.points.size(); ++k) {
        if (std::abs(leaf.points[k].y) > 1e-6) left = true;
        else if (left && in_J(leaf.points[k])) {
          if (k * dt < best) { best = k * dt; best_leaf = &leaf; }
          break;
        }
      }
    }
    if (best_leaf) {
      w.found = true;
      w.return_time = best;
      for (const auto& d : best_leaf->decisions)
        if (d.time <= best) w.decisions.push_back(d);
      rep.M = std::min(rep.M, best);
    } else {
      rep.all_found = false;
    }
    rep.points.push_back(std::move(w));
  }
  if (std::isfinite(rep.M) && rep.M > 0) rep.c = static_cast<int>(std::floor(1.0 / rep.M)) + 1;
  return rep;
}

}  // namespace fpe
