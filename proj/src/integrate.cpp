#include "fpe/integrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <queue>
#include <thread>
#include <unordered_set>

namespace fpe {

const char* to_string(Choice c) {
  switch (c) {
    case Choice::FollowX: return "FollowX";
    case Choice::FollowY: return "FollowY";
    case Choice::Slide: return "Slide";
    case Choice::ExitSlideToX: return "ExitSlideToX";
    case Choice::ExitSlideToY: return "ExitSlideToY";
    case Choice::StayFixed: return "StayFixed";
  }
  return "?";
}

std::optional<Choice> choice_from_string(const std::string& s) {
  for (Choice c : {Choice::FollowX, Choice::FollowY, Choice::Slide, Choice::ExitSlideToX,
                   Choice::ExitSlideToY, Choice::StayFixed})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

std::size_t grid_count(double W, double dt) {
  return static_cast<std::size_t>(std::llround(2.0 * W / dt)) + 1;
}

std::size_t SampledTrajectory::samples_per_unit() const {
  return static_cast<std::size_t>(std::llround(1.0 / dt));
}

std::size_t SampledTrajectory::index_of(double t) const {
  const double i = std::round((t + window) / dt);
  if (i < 0 || i >= static_cast<double>(points.size()))
    throw Error(ErrorCode::WindowExceeded, "time outside the sampled window");
  return static_cast<std::size_t>(i);
}

unsigned worker_count() {
  if (const char* env = std::getenv("FPE_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

template <class F>
Vec2 rk4(const F& V, Vec2 p, double h) {
  const Vec2 k1 = V(p);
  const Vec2 k2 = V(p + k1 * (h / 2));
  const Vec2 k3 = V(p + k2 * (h / 2));
  const Vec2 k4 = V(p + k3 * h);
  return p + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6);
}

Vec2 project(const SwitchingFunction& f, Vec2 p) {
  for (int it = 0; it < 2; ++it) {
    const Vec2 g = f.grad(p);
    const double gg = dot(g, g);
    if (gg == 0.0) break;
    p -= g * (f(p) / gg);
  }
  return p;
}

Vec2 unit_tangent(const SwitchingFunction& f, Vec2 p) {
  const Vec2 g = f.grad(p);
  return Vec2{-g.y, g.x} / norm(g);
}

int sgn(double v) { return (v > 0) - (v < 0); }

// Shared state of one piece of motion along the sample grid of a half-tree.
struct Cursor {
  double t = 0.0;
  Vec2 p;
  std::size_t next_k = 0;  // first grid sample not yet recorded
};

enum class Stop { Horizon, Crossing, Graze, Boundary, Exit, Domain };

struct Grid {
  double dt;
  std::size_t K;  // last index
  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
};

// Records the cursor point for the grid sample at the cursor time, if due.
void record_due(const Grid& g, Cursor& c, std::vector<Vec2>& out) {
  while (c.next_k <= g.K && g.time(c.next_k) <= c.t + 1e-12) {
    out.push_back(c.p);
    ++c.next_k;
  }
}

// Bisection on h in [a, b] for a predicate true at a and false at b;
// returns the final b.
template <class Pred>
double bisect(double a, double b, double tol, const Pred& pred, int max_iter = 200) {
  for (int i = 0; i < max_iter && b - a > tol; ++i) {
    const double m = 0.5 * (a + b);
    if (pred(m)) a = m; else b = m;
  }
  return b;
}

struct SmoothCtx {
  const PlanarField& V;
  const SwitchingFunction& f;
  const Rect* domain;
  const Tolerances& tol;
};

struct StepEvent {
  double h;
  Vec2 p;
  bool graze;
};

// Looks for a crossing or a graze within one RK4 step of length h from p.
std::optional<StepEvent> detect_event(const SmoothCtx& c, int s, Vec2 p, double h, Vec2 q,
                                      bool start_on) {
  auto F = [&](double hh) { return s * c.f(rk4(c.V, p, hh)); };
  auto G = [&](double hh) {
    Vec2 r = rk4(c.V, p, hh);
    return s * dot(c.f.grad(r), c.V(r));
  };
  const double te = c.tol.tol_event_time;
  const double fq = s * c.f(q);
  const double gp = s * dot(c.f.grad(p), c.V(p));
  const double gq = s * dot(c.f.grad(q), c.V(q));

  auto crossing_from = [&](double lo) -> StepEvent {
    const double b = bisect(lo, h, te, [&](double m) { return F(m) > 0; });
    return {b, project(c.f, rk4(c.V, p, b)), false};
  };

  if (fq < 0) {
    if (!start_on) return crossing_from(0.0);
    if (std::abs(fq) <= c.tol.tol_f && gq >= 0) return std::nullopt;  // residual only
    if (gp > 0 && gq < 0) {
      const double top = bisect(0.0, h, te, [&](double m) { return G(m) > 0; });
      if (F(top) > 0) return crossing_from(top);
    }
    return StepEvent{0.0, p, false};  // the field points straight back
  }
  if (gp < 0 && gq > 0) {
    const double hs = bisect(0.0, h, te, [&](double m) { return G(m) < 0; });
    const double fs = F(hs);
    if (start_on && fs >= -c.tol.tol_f) return std::nullopt;
    if (fs < 0 && !start_on) {
      const double b = bisect(0.0, hs, te, [&](double m) { return F(m) > 0; });
      return StepEvent{b, project(c.f, rk4(c.V, p, b)), false};
    }
    if (fs <= c.tol.tol_graze) return StepEvent{hs, project(c.f, rk4(c.V, p, hs)), true};
  }
  return std::nullopt;
}

struct PieceEnd {
  Stop stop;
};

PieceEnd run_smooth(const SmoothCtx& c, int side, const Grid& g, double t_end, Cursor& cur,
                    std::vector<Vec2>& out) {
  record_due(g, cur, out);
  bool start_on = side * c.f(cur.p) <= c.tol.tol_f;
  while (cur.t < t_end - 1e-13) {
    const double target = std::min(g.time(cur.next_k), t_end);
    const double h = target - cur.t;
    if (h <= 0) { record_due(g, cur, out); continue; }
    const Vec2 q = rk4(c.V, cur.p, h);
    if (auto ev = detect_event(c, side, cur.p, h, q, start_on)) {
      cur.t += ev->h;
      cur.p = ev->p;
      record_due(g, cur, out);
      return {ev->graze ? Stop::Graze : Stop::Crossing};
    }
    if (c.domain && !c.domain->contains(q, 1e-9)) return {Stop::Domain};
    cur.p = q;
    cur.t = target;
    start_on = false;
    record_due(g, cur, out);
  }
  return {Stop::Horizon};
}

struct SlideCtx {
  const PiecewiseSystem& sys;
  const Tolerances& tol;
};

// Region signature of a sliding/escaping point; nullopt when not strictly inside one.
std::optional<std::pair<int, int>> slide_signs(const PiecewiseSystem& sys, Vec2 q,
                                               const Tolerances& tol) {
  const double xf = sys.Xf(q), yf = sys.Yf(q);
  if (std::abs(xf) <= tol.tol_lie * 0.1 || std::abs(yf) <= tol.tol_lie * 0.1) return std::nullopt;
  if (sgn(xf) == sgn(yf)) return std::nullopt;
  return std::make_pair(sgn(xf), sgn(yf));
}

std::optional<Vec2> slide_step(const SlideCtx& c, Vec2 p, double h) {
  try {
    auto Z = [&](Vec2 q) { return sliding_field(c.sys, q, c.tol); };
    return project(c.sys.f, rk4(Z, p, h));
  } catch (const Error&) {
    return std::nullopt;
  }
}

PieceEnd run_slide(const SlideCtx& c, const Grid& g, double t_end, double next_exit,
                   Cursor& cur, std::vector<Vec2>& out) {
  record_due(g, cur, out);
  const auto sig = slide_signs(c.sys, cur.p, c.tol);
  if (!sig) return {Stop::Boundary};
  auto same = [&](std::optional<Vec2> q) {
    if (!q) return false;
    auto s = slide_signs(c.sys, *q, c.tol);
    return s && *s == *sig;
  };
  while (cur.t < t_end - 1e-13) {
    double target = std::min(g.time(cur.next_k), t_end);
    bool at_exit = false;
    if (next_exit <= target + 1e-12) {
      target = next_exit;
      at_exit = true;
    }
    const double h = target - cur.t;
    if (h <= 0) {
      if (at_exit) return {Stop::Exit};
      record_due(g, cur, out);
      continue;
    }
    auto q = slide_step(c, cur.p, h);
    if (!same(q)) {
      const Vec2 p0 = cur.p;
      double a = 0.0, b = h;
      while (b - a > 1e-15) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        if (same(slide_step(c, p0, m))) a = m; else b = m;
      }
      // Stage evaluations at the boundary itself can fail (the sliding
      // denominator vanishes there); fall back to the last good point.
      auto e = slide_step(c, p0, b);
      if (!e) { b = a; e = slide_step(c, p0, a); }
      cur.t += b;
      if (e) cur.p = *e;
      record_due(g, cur, out);
      return {Stop::Boundary};
    }
    if (!c.sys.domain.contains(*q, 1e-9)) return {Stop::Domain};
    cur.p = *q;
    cur.t = target;
    record_due(g, cur, out);
    if (at_exit) return {Stop::Exit};
  }
  return {Stop::Horizon};
}

// A point a hair away from the tangency p along the switching curve, far
// enough that it is no longer a tangency itself.
Vec2 sigma_neighbor(const PiecewiseSystem& sys, Vec2 p, int dir, const Tolerances& tol) {
  const Vec2 T = unit_tangent(sys.f, p);
  const double diam = sys.domain.diameter();
  Vec2 q = p;
  for (double d = 1e-8 * diam; d <= 1e-4 * diam; d *= 2) {
    q = project(sys.f, p + T * (d * dir));
    if (std::abs(sys.Xf(q)) > 10 * tol.tol_lie && std::abs(sys.Yf(q)) > 10 * tol.tol_lie) break;
  }
  return q;
}

}  // namespace

// ---------------------------------------------------------------------------

FlowResult flow_smooth(const PlanarField& field, Vec2 p, double t_span, double dt,
                       const SwitchingFunction& f, const Tolerances& tol,
                       std::optional<Rect> domain, int side) {
  if (dt <= 0) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (side == 0) {
    const double fv = f(p);
    if (std::abs(fv) > tol.tol_f) side = sgn(fv);
    else {
      const double g = dot(f.grad(p), field(p));
      side = std::abs(g) > tol.tol_lie ? sgn(g) : (lie_derivative(field, f, p, 2) >= 0 ? 1 : -1);
    }
  }
  FlowResult r;
  const Grid g{dt, static_cast<std::size_t>(std::floor(t_span / dt + 1e-9))};
  Cursor cur{0.0, p, 0};
  SmoothCtx c{field, f, domain ? &*domain : nullptr, tol};
  auto end = run_smooth(c, side, g, t_span, cur, r.arc);
  if (end.stop == Stop::Domain)
    throw Error(ErrorCode::DomainExit, "arc left the domain before any event");
  if (end.stop == Stop::Crossing || end.stop == Stop::Graze) {
    r.event = SmoothEvent{cur.t, cur.p, end.stop == Stop::Graze};
    if (r.arc.empty() || !(r.arc.back() == cur.p)) r.arc.push_back(cur.p);
  }
  return r;
}

std::vector<Continuation> step_filippov(const PiecewiseSystem& sys, Vec2 p, double t,
                                        const Tolerances& tol) {
  const PointClass cls = classify_point(sys, p, tol);
  auto mk = [&](Choice ch, int dir = 0, Vec2 start = {}) {
    return Continuation{BranchDecision{t, p, ch, dir}, ch == Choice::Slide ? start : p};
  };
  auto slide_dir = [&](Vec2 q) {
    try {
      return sgn(dot(sliding_field(sys, q, tol), unit_tangent(sys.f, q)));
    } catch (const Error&) {
      return 0;
    }
  };
  switch (cls.region) {
    case Region::SigmaPlus:
    case Region::SigmaMinus:
      throw Error(ErrorCode::InvalidArgument, "point is not on the switching curve");
    case Region::Degenerate:
      throw Error(ErrorCode::DegeneratePoint, "both Lie derivatives vanish to second order");
    case Region::CrossingPos: return {mk(Choice::FollowX)};
    case Region::CrossingNeg: return {mk(Choice::FollowY)};
    case Region::Sliding: return {mk(Choice::Slide, slide_dir(p), p)};
    case Region::Escaping:
      return {mk(Choice::FollowX), mk(Choice::FollowY), mk(Choice::Slide, slide_dir(p), p)};
    case Region::Fold:
    case Region::TwoFold: break;
  }
  if (cls.singular()) return {mk(Choice::StayFixed)};

  std::vector<Continuation> out;
  const double xf = sys.Xf(p), yf = sys.Yf(p);
  const bool tx = std::abs(xf) <= tol.tol_lie, ty = std::abs(yf) <= tol.tol_lie;
  if ((!tx && xf > 0) || (tx && cls.vis_x)) out.push_back(mk(Choice::FollowX));
  if ((!ty && yf < 0) || (ty && cls.vis_y)) out.push_back(mk(Choice::FollowY));
  for (int dir : {+1, -1}) {
    const Vec2 q = sigma_neighbor(sys, p, dir, tol);
    const Region r = classify_point(sys, q, tol).region;
    if ((r == Region::Sliding || r == Region::Escaping) && slide_dir(q) == dir)
      out.push_back(mk(Choice::Slide, dir, q));
  }
  if (out.empty()) out.push_back(mk(Choice::StayFixed));
  return out;
}

SlideResult slide_segment(const PiecewiseSystem& sys, Vec2 p, int direction, double dt,
                          double t_span, const BranchPolicy& policy, const Tolerances& tol) {
  SlideResult r;
  Vec2 start = p;
  if (!slide_signs(sys, p, tol)) start = sigma_neighbor(sys, p, direction, tol);
  const auto sig = slide_signs(sys, start, tol);
  const bool escaping = sig && sig->first > 0;
  const Grid g{dt, static_cast<std::size_t>(std::floor(t_span / dt + 1e-9))};
  Cursor cur{0.0, start, 0};
  SlideCtx c{sys, tol};
  if (escaping) r.exits.emplace_back(0.0, start);
  double next_exit = escaping ? policy.slide_exit_grid : std::numeric_limits<double>::infinity();
  for (;;) {
    auto end = run_slide(c, g, t_span, next_exit, cur, r.arc);
    if (end.stop == Stop::Exit) {
      r.exits.emplace_back(cur.t, cur.p);
      next_exit += policy.slide_exit_grid;
      continue;
    }
    if (end.stop == Stop::Domain) throw Error(ErrorCode::DomainExit, "slide left the domain");
    r.reached_boundary = end.stop == Stop::Boundary;
    break;
  }
  r.duration = cur.t;
  r.end = cur.p;
  return r;
}

// ---------------------------------------------------------------------------
// Branch tree

namespace {

struct Node {
  int parent = -1;
  std::vector<Vec2> samples;
  std::vector<BranchDecision> decisions;
};

enum class Mode { Decide, Smooth, Slide, Fixed, ExitDecide };

struct Live {
  int node = 0;
  std::vector<int> key;
  Cursor cur;
  Mode mode = Mode::Decide;
  Which field = Which::X;
  int side = 1;
  double slide_t0 = 0.0;
  int exit_k = 1;
  bool escaping = false;
  int stall = 0;
};

struct LiveOrder {
  bool operator()(const Live& a, const Live& b) const {
    if (a.cur.t != b.cur.t) return a.cur.t > b.cur.t;
    return a.key > b.key;
  }
};

}  // namespace

HalfTree expand_forward(const PiecewiseSystem& sys, Vec2 p0, double T, double dt,
                        const BranchPolicy& policy, int max_leaves, double branch_until,
                        const Tolerances& tol) {
  const Grid g{dt, static_cast<std::size_t>(std::llround(T / dt))};
  std::vector<Node> nodes(1);
  std::vector<std::pair<std::vector<int>, int>> done;  // (key, node)
  std::priority_queue<Live, std::vector<Live>, LiveOrder> heap;
  HalfTree tree;
  std::size_t leaves = 1;

  Live root;
  root.cur = {0.0, p0, 0};
  const double f0 = sys.f(p0);
  if (std::abs(f0) > tol.tol_f) {
    root.mode = Mode::Smooth;
    root.field = f0 > 0 ? Which::X : Which::Y;
    root.side = sgn(f0);
  }
  heap.push(root);

  const SlideCtx sctx{sys, tol};
  auto finish_fixed = [&](Live& L) {
    auto& out = nodes[L.node].samples;
    while (L.cur.next_k <= g.K) { out.push_back(L.cur.p); ++L.cur.next_k; }
    done.emplace_back(L.key, L.node);
  };

  while (!heap.empty()) {
    Live L = heap.top();
    heap.pop();
    auto& out = nodes[L.node].samples;

    if (L.mode == Mode::Fixed) { finish_fixed(L); continue; }
    if (L.cur.t >= g.time(g.K) - 1e-13 && L.mode != Mode::Smooth && L.mode != Mode::Slide) {
      record_due(g, L.cur, out);
      finish_fixed(L);
      continue;
    }

    if (L.mode == Mode::Decide || L.mode == Mode::ExitDecide) {
      std::vector<Continuation> opts;
      const PointClass cls = classify_point(sys, L.cur.p, tol);
      if (L.mode == Mode::ExitDecide) {
        opts = {Continuation{BranchDecision{L.cur.t, L.cur.p, Choice::Slide, 0}, L.cur.p},
                Continuation{BranchDecision{L.cur.t, L.cur.p, Choice::ExitSlideToX, 0}, L.cur.p},
                Continuation{BranchDecision{L.cur.t, L.cur.p, Choice::ExitSlideToY, 0}, L.cur.p}};
      } else {
        opts = step_filippov(sys, L.cur.p, L.cur.t, tol);
      }
      if (opts.size() > 1 && policy.allow) {
        std::vector<Continuation> kept;
        for (auto& o : opts)
          if (policy.allow(o.decision, cls)) kept.push_back(o);
        if (kept.empty()) kept.push_back(opts.front());
        opts = std::move(kept);
      }
      bool branch = opts.size() > 1 && L.cur.t < branch_until;
      if (branch && leaves + opts.size() - 1 > static_cast<std::size_t>(max_leaves)) {
        branch = false;
        tree.budget_exceeded = true;
      }
      if (!branch) opts.resize(1);
      const bool split = opts.size() > 1;
      for (std::size_t i = 0; i < opts.size(); ++i) {
        Live C = L;
        if (split) {
          nodes.push_back(Node{L.node, {}, {}});
          C.node = static_cast<int>(nodes.size()) - 1;
          C.key.push_back(static_cast<int>(i));
        }
        const auto& o = opts[i];
        nodes[C.node].decisions.push_back(o.decision);
        switch (o.decision.choice) {
          case Choice::FollowX:
          case Choice::ExitSlideToX:
            C.mode = Mode::Smooth; C.field = Which::X; C.side = 1; break;
          case Choice::FollowY:
          case Choice::ExitSlideToY:
            C.mode = Mode::Smooth; C.field = Which::Y; C.side = -1; break;
          case Choice::StayFixed:
            C.mode = Mode::Fixed; break;
          case Choice::Slide:
            C.mode = Mode::Slide;
            if (L.mode != Mode::ExitDecide) {
              C.cur.p = o.start;
              C.slide_t0 = C.cur.t;
              C.exit_k = 1;
              const auto sig = slide_signs(sys, C.cur.p, tol);
              C.escaping = sig && sig->first > 0;
            }
            break;
        }
        heap.push(std::move(C));
      }
      leaves += opts.size() - 1;
      continue;
    }

    const double t_start = L.cur.t;
    Stop stop;
    if (L.mode == Mode::Smooth) {
      SmoothCtx c{sys.field(L.field), sys.f, &sys.domain, tol};
      stop = run_smooth(c, L.side, g, g.time(g.K), L.cur, out).stop;
    } else {
      const double next_exit = L.escaping ? L.slide_t0 + L.exit_k * policy.slide_exit_grid
                                          : std::numeric_limits<double>::infinity();
      stop = run_slide(sctx, g, g.time(g.K), next_exit, L.cur, out).stop;
    }
    switch (stop) {
      case Stop::Horizon:
        record_due(g, L.cur, out);
        finish_fixed(L);
        continue;
      case Stop::Domain:
        if (!policy.freeze_on_domain_exit)
          throw Error(ErrorCode::DomainExit, "branch left the domain of " + sys.name);
        ++tree.frozen;
        finish_fixed(L);
        continue;
      case Stop::Exit:
        ++L.exit_k;
        L.mode = Mode::ExitDecide;
        break;
      case Stop::Crossing:
      case Stop::Graze:
      case Stop::Boundary:
        L.mode = Mode::Decide;
        break;
    }
    L.stall = L.cur.t - t_start < 1e-12 ? L.stall + 1 : 0;
    if (L.stall > 3) L.mode = Mode::Fixed;
    heap.push(std::move(L));
  }

  std::sort(done.begin(), done.end());
  tree.leaves.reserve(done.size());
  for (const auto& [key, leaf] : done) {
    std::vector<int> chain;
    for (int n = leaf; n >= 0; n = nodes[n].parent) chain.push_back(n);
    HalfBranch b;
    b.points.reserve(g.K + 1);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      const Node& nd = nodes[*it];
      b.points.insert(b.points.end(), nd.samples.begin(), nd.samples.end());
      b.decisions.insert(b.decisions.end(), nd.decisions.begin(), nd.decisions.end());
    }
    while (b.points.size() < g.K + 1) b.points.push_back(b.points.back());
    b.points.resize(g.K + 1);
    tree.leaves.push_back(std::move(b));
  }
  return tree;
}

namespace {

std::vector<SampledTrajectory> join_halves(const PiecewiseSystem& sys, const HalfTree& past,
                                           const HalfTree& future, double W, double dt,
                                           std::size_t cap, bool& truncated) {
  std::vector<SampledTrajectory> out;
  for (const auto& b : past.leaves) {
    for (const auto& f : future.leaves) {
      if (out.size() >= cap) { truncated = true; return out; }
      SampledTrajectory s;
      s.system_name = sys.name;
      s.window = W;
      s.dt = dt;
      s.points.reserve(b.points.size() + f.points.size() - 1);
      s.points.assign(b.points.rbegin(), b.points.rend());
      s.points.insert(s.points.end(), f.points.begin() + 1, f.points.end());
      for (auto it = b.decisions.rbegin(); it != b.decisions.rend(); ++it) {
        BranchDecision d = *it;
        d.time = -d.time;
        d.direction = -d.direction;
        s.decisions.push_back(d);
      }
      s.decisions.insert(s.decisions.end(), f.decisions.begin(), f.decisions.end());
      out.push_back(std::move(s));
    }
  }
  return out;
}

struct PointsHash {
  std::size_t operator()(const std::vector<Vec2>* v) const {
    std::size_t h = v->size();
    for (const auto& p : *v) {
      h ^= std::hash<double>{}(p.x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h ^= std::hash<double>{}(p.y) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};
struct PointsEq {
  bool operator()(const std::vector<Vec2>* a, const std::vector<Vec2>* b) const { return *a == *b; }
};

}  // namespace

TrajectorySet generate_trajectories(const PiecewiseSystem& sys, const std::vector<Vec2>& seeds,
                                    const BranchPolicy& policy, double dt, const Tolerances& tol) {
  if (policy.max_branches < 1 || policy.slide_exit_grid <= 0 || dt <= 0 || policy.horizon < 0)
    throw Error(ErrorCode::InvalidArgument, "invalid branch policy");
  for (const auto& s : seeds)
    if (!sys.domain.contains(s)) throw Error(ErrorCode::InvalidArgument, "seed outside domain");

  const double W = policy.horizon;
  const PiecewiseSystem rev = sys.reversed();
  BranchPolicy back = policy;
  back.allow = nullptr;

  struct PerSeed {
    std::vector<SampledTrajectory> trajs;
    bool exceeded = false;
    std::size_t frozen = 0;
    std::exception_ptr error;
  };
  std::vector<PerSeed> results(seeds.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
      try {
        auto fut = expand_forward(sys, seeds[i], W, dt, policy, policy.max_branches,
                                  policy.branch_until, tol);
        auto past = expand_forward(rev, seeds[i], W, dt, back, std::max(1, policy.past_branches),
                                   std::numeric_limits<double>::infinity(), tol);
        bool trunc = false;
        results[i].trajs = join_halves(sys, past, fut, W, dt,
                                       static_cast<std::size_t>(policy.max_branches), trunc);
        results[i].exceeded = fut.budget_exceeded || past.budget_exceeded || trunc;
        results[i].frozen = fut.frozen + past.frozen;
      } catch (...) {
        results[i].error = std::current_exception();
      }
    }
  };
  const unsigned nthreads = std::min<unsigned>(worker_count(), std::max<std::size_t>(1, seeds.size()));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < nthreads; ++k) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  TrajectorySet set;
  for (auto& r : results) {
    if (r.error) std::rethrow_exception(r.error);
    set.budget_exceeded |= r.exceeded;
    set.frozen += r.frozen;
    for (auto& t : r.trajs) set.trajectories.push_back(std::move(t));
  }
  if (policy.dedupe) {
    std::unordered_set<const std::vector<Vec2>*, PointsHash, PointsEq> seen;
    std::vector<char> keep(set.trajectories.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
      keep[i] = seen.insert(&set.trajectories[i].points).second;
    std::vector<SampledTrajectory> uniq;
    for (std::size_t i = 0; i < keep.size(); ++i)
      if (keep[i]) uniq.push_back(std::move(set.trajectories[i]));
    set.trajectories = std::move(uniq);
  }
  return set;
}

InvariantReport check_invariant_set(const PiecewiseSystem&,
                                    const std::function<bool(Vec2, double)>& region,
                                    const std::vector<SampledTrajectory>& trajectories,
                                    const Tolerances& tol) {
  InvariantReport r;
  for (const auto& tr : trajectories) {
    for (const auto& p : tr.points) {
      ++r.checked;
      if (!region(p, tol.tol_f)) {
        ++r.violations;
        if (!r.first_violation) r.first_violation = p;
      }
    }
  }
  r.invariant = r.violations == 0;
  return r;
}

}  // namespace fpe
