#include "fpe/psvf.hpp"

#include <algorithm>
#include <cmath>

namespace fpe {

const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::DegeneratePoint: return "DegeneratePoint";
    case ErrorCode::DomainExit: return "DomainExit";
    case ErrorCode::WindowExceeded: return "WindowExceeded";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NoReturnInWindow: return "NoReturnInWindow";
    case ErrorCode::BranchBudgetExceeded: return "BranchBudgetExceeded";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

// ---------------------------------------------------------------- fields

PlanarField::PlanarField() : PlanarField(Polynomial2{}, Polynomial2{}) {}

PlanarField::PlanarField(Fn fn) : fn_(std::make_shared<const Fn>(std::move(fn))) {}

PlanarField::PlanarField(Polynomial2 u, Polynomial2 v)
    : poly_(std::make_shared<const std::pair<Polynomial2, Polynomial2>>(std::move(u),
                                                                        std::move(v))) {}

Vec2 PlanarField::operator()(Vec2 p) const {
  if (poly_) return {poly_->first(p), poly_->second(p)};
  return (*fn_)(p);
}

PlanarField PlanarField::scaled(double c) const {
  if (poly_) return PlanarField(poly_->first * c, poly_->second * c);
  auto fn = fn_;
  return PlanarField([fn, c](Vec2 p) { return (*fn)(p) * c; });
}

PlanarField PlanarField::rotated(double angle) const {
  const double c = std::cos(angle), s = std::sin(angle);
  PlanarField base = *this;
  return PlanarField([base, c, s](Vec2 p) {
    Vec2 q{c * p.x + s * p.y, -s * p.x + c * p.y};  // R^-1 p
    Vec2 v = base(q);
    return Vec2{c * v.x - s * v.y, s * v.x + c * v.y};
  });
}

SwitchingFunction::SwitchingFunction() : SwitchingFunction(Polynomial2::y()) {}

SwitchingFunction::SwitchingFunction(Polynomial2 f)
    : poly_(std::make_shared<const Polynomial2>(f)),
      px_(std::make_shared<const Polynomial2>(f.dx())),
      py_(std::make_shared<const Polynomial2>(f.dy())) {}

SwitchingFunction::SwitchingFunction(Fn f, GradFn grad)
    : fn_(std::make_shared<const Fn>(std::move(f))),
      grad_(std::make_shared<const GradFn>(std::move(grad))) {}

double SwitchingFunction::operator()(Vec2 p) const { return poly_ ? (*poly_)(p) : (*fn_)(p); }

Vec2 SwitchingFunction::grad(Vec2 p) const {
  if (poly_) return {(*px_)(p), (*py_)(p)};
  return (*grad_)(p);
}

// ---------------------------------------------------------------- system

namespace {

Polynomial2 lie_poly(const PlanarField& F, const SwitchingFunction& f) {
  const Polynomial2& g = f.poly();
  return g.dx() * F.u() + g.dy() * F.v();
}

double sampled_speed_bound(const PlanarField& X, const PlanarField& Y, const Rect& d) {
  constexpr int kGrid = 201;
  double m = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      Vec2 p{d.xmin + (d.xmax - d.xmin) * i / (kGrid - 1),
             d.ymin + (d.ymax - d.ymin) * j / (kGrid - 1)};
      m = std::max({m, norm(X(p)), norm(Y(p))});
    }
  }
  // The sup between grid nodes can exceed the sampled max slightly.
  return std::max(m * 1.02, 1e-12);
}

}  // namespace

PiecewiseSystem::PiecewiseSystem(std::string name_, PlanarField X_, PlanarField Y_,
                                 SwitchingFunction f_, Rect domain_)
    : name(std::move(name_)), X(std::move(X_)), Y(std::move(Y_)), f(std::move(f_)),
      domain(domain_) {
  speed_bound = sampled_speed_bound(X, Y, domain);
  if (f.is_polynomial() && X.is_polynomial() && Y.is_polynomial()) {
    auto a = lie_poly(X, f), b = lie_poly(Y, f);
    gxf_ = std::make_shared<const std::pair<Polynomial2, Polynomial2>>(a.dx(), a.dy());
    gyf_ = std::make_shared<const std::pair<Polynomial2, Polynomial2>>(b.dx(), b.dy());
    xf_ = std::make_shared<const Polynomial2>(std::move(a));
    yf_ = std::make_shared<const Polynomial2>(std::move(b));
  }
}

double PiecewiseSystem::lie2(Which w, Vec2 p) const {
  const PlanarField& F = field(w);
  if (gxf_) {
    const auto& g = w == Which::X ? *gxf_ : *gyf_;
    return dot(Vec2{g.first(p), g.second(p)}, F(p));
  }
  const double h = h_fd();
  const Vec2 ex{h, 0.0}, ey{0.0, h};
  Vec2 grad{(lie(w, p + ex) - lie(w, p - ex)) / (2 * h), (lie(w, p + ey) - lie(w, p - ey)) / (2 * h)};
  return dot(grad, F(p));
}

PiecewiseSystem PiecewiseSystem::reversed() const { return scaled(-1.0); }

PiecewiseSystem PiecewiseSystem::scaled(double c) const {
  PiecewiseSystem s(name, X.scaled(c), Y.scaled(c), f, domain);
  return s;
}

double lie_derivative(const PlanarField& field, const SwitchingFunction& f, Vec2 p, int order,
                      double h_fd) {
  if (order == 1) return dot(f.grad(p), field(p));
  if (order != 2) throw Error(ErrorCode::InvalidArgument, "Lie derivative order must be 1 or 2");
  if (field.is_polynomial() && f.is_polynomial()) {
    Polynomial2 g = lie_poly(field, f);
    return dot(Vec2{g.dx()(p), g.dy()(p)}, field(p));
  }
  auto l1 = [&](Vec2 q) { return dot(f.grad(q), field(q)); };
  const Vec2 ex{h_fd, 0.0}, ey{0.0, h_fd};
  Vec2 grad{(l1(p + ex) - l1(p - ex)) / (2 * h_fd), (l1(p + ey) - l1(p - ey)) / (2 * h_fd)};
  return dot(grad, field(p));
}

// ---------------------------------------------------------------- classes

const char* to_string(Region r) {
  switch (r) {
    case Region::SigmaPlus: return "SigmaPlus";
    case Region::SigmaMinus: return "SigmaMinus";
    case Region::CrossingPos: return "CrossingPos";
    case Region::CrossingNeg: return "CrossingNeg";
    case Region::Sliding: return "Sliding";
    case Region::Escaping: return "Escaping";
    case Region::Fold: return "Fold";
    case Region::TwoFold: return "TwoFold";
    case Region::Degenerate: return "Degenerate";
  }
  return "?";
}

std::string PointClass::label() const {
  auto vis = [](bool v) { return v ? "visible" : "invisible"; };
  switch (region) {
    case Region::Fold:
      return std::string("Fold(") + (fold_field == Which::X ? "X" : "Y") + "," + vis(visible()) + ")";
    case Region::TwoFold:
      if (singular()) return "TwoFold(X=invisible,Y=invisible;singular)";
      return std::string("TwoFold(X=") + vis(vis_x) + ",Y=" + vis(vis_y) + ")";
    default:
      return to_string(region);
  }
}

PointClass classify_values(const LieSigns& s, const Tolerances& tol) {
  PointClass c;
  if (s.f > tol.tol_f) { c.region = Region::SigmaPlus; return c; }
  if (s.f < -tol.tol_f) { c.region = Region::SigmaMinus; return c; }

  const bool tx = std::abs(s.xf) <= tol.tol_lie;
  const bool ty = std::abs(s.yf) <= tol.tol_lie;
  if (!tx && !ty) {
    if (s.xf > 0 && s.yf > 0) c.region = Region::CrossingPos;
    else if (s.xf < 0 && s.yf < 0) c.region = Region::CrossingNeg;
    else if (s.xf < 0) c.region = Region::Sliding;
    else c.region = Region::Escaping;
    return c;
  }
  if (tx) {
    if (!s.x2f || std::abs(*s.x2f) <= tol.tol_lie) { c.region = Region::Degenerate; return c; }
    c.vis_x = *s.x2f > 0;  // X lives on f > 0: its orbit bends back up
  }
  if (ty) {
    if (!s.y2f || std::abs(*s.y2f) <= tol.tol_lie) { c.region = Region::Degenerate; return c; }
    c.vis_y = *s.y2f < 0;  // Y lives on f < 0
  }
  if (tx && ty) {
    c.region = Region::TwoFold;
  } else {
    c.region = Region::Fold;
    c.fold_field = tx ? Which::X : Which::Y;
  }
  return c;
}

PointClass classify_point(const PiecewiseSystem& sys, Vec2 p, const Tolerances& tol) {
  LieSigns s;
  s.f = sys.f(p);
  if (std::abs(s.f) <= tol.tol_f) {
    s.xf = sys.Xf(p);
    s.yf = sys.Yf(p);
    if (std::abs(s.xf) <= tol.tol_lie) s.x2f = sys.lie2(Which::X, p);
    if (std::abs(s.yf) <= tol.tol_lie) s.y2f = sys.lie2(Which::Y, p);
  }
  return classify_values(s, tol);
}

double sliding_lambda(const PiecewiseSystem& sys, Vec2 p, const Tolerances& tol) {
  const double xf = sys.Xf(p), yf = sys.Yf(p);
  if (std::abs(yf - xf) <= tol.tol_lie)
    throw Error(ErrorCode::DegenerateDenominator, "Yf - Xf vanishes");
  return yf / (yf - xf);
}

Vec2 sliding_field(const PiecewiseSystem& sys, Vec2 p, const Tolerances& tol) {
  const Vec2 g = sys.f.grad(p);
  const Vec2 X = sys.X(p), Y = sys.Y(p);
  const double xf = dot(g, X), yf = dot(g, Y);
  const double den = yf - xf;
  if (std::abs(den) <= tol.tol_lie)
    throw Error(ErrorCode::DegenerateDenominator, "Yf - Xf vanishes");
  Vec2 z = (yf * X - xf * Y) / den;
  // Cancel the round-off normal component so that <grad f, Z^s> is ~1 ulp.
  const double gg = dot(g, g);
  if (gg > 0) z -= g * (dot(g, z) / gg);
  return z;
}

}  // namespace fpe
