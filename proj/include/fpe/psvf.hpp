#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "fpe/errors.hpp"
#include "fpe/geometry.hpp"
#include "fpe/polynomial.hpp"

namespace fpe {

// A smooth planar vector field. Either a black-box callable or a pair of
// polynomials; the polynomial form enables exact second Lie derivatives.
class PlanarField {
 public:
  using Fn = std::function<Vec2(Vec2)>;

  PlanarField();  // the zero field
  explicit PlanarField(Fn fn);
  PlanarField(Polynomial2 u, Polynomial2 v);

  Vec2 operator()(Vec2 p) const;

  bool is_polynomial() const { return poly_ != nullptr; }
  const Polynomial2& u() const { return poly_->first; }
  const Polynomial2& v() const { return poly_->second; }

  PlanarField scaled(double c) const;
  // Conjugation by the rotation R(angle): p -> R X(R^-1 p).
  PlanarField rotated(double angle) const;

 private:
  std::shared_ptr<const std::pair<Polynomial2, Polynomial2>> poly_;
  std::shared_ptr<const Fn> fn_;
};

class SwitchingFunction {
 public:
  using Fn = std::function<double(Vec2)>;
  using GradFn = std::function<Vec2(Vec2)>;

  SwitchingFunction();  // f = y
  explicit SwitchingFunction(Polynomial2 f);
  SwitchingFunction(Fn f, GradFn grad);

  double operator()(Vec2 p) const;
  Vec2 grad(Vec2 p) const;

  bool is_polynomial() const { return poly_ != nullptr; }
  const Polynomial2& poly() const { return *poly_; }

 private:
  std::shared_ptr<const Polynomial2> poly_, px_, py_;
  std::shared_ptr<const Fn> fn_;
  std::shared_ptr<const GradFn> grad_;
};

struct Tolerances {
  double tol_f = 1e-9;
  double tol_lie = 1e-9;
  double tol_event_time = 1e-10;
  // A smooth arc whose closest approach to the switching curve is within
  // this distance (in f units) is treated as touching it.
  double tol_graze = 1e-7;
};

enum class Which { X, Y };

class PiecewiseSystem {
 public:
  std::string name;
  PlanarField X, Y;
  SwitchingFunction f;
  Rect domain;
  double speed_bound = 0.0;

  PiecewiseSystem() = default;
  PiecewiseSystem(std::string name, PlanarField X, PlanarField Y, SwitchingFunction f,
                  Rect domain);

  const PlanarField& field(Which w) const { return w == Which::X ? X : Y; }

  double Xf(Vec2 p) const { return dot(f.grad(p), X(p)); }
  double Yf(Vec2 p) const { return dot(f.grad(p), Y(p)); }
  double lie(Which w, Vec2 p) const { return w == Which::X ? Xf(p) : Yf(p); }
  double lie2(Which w, Vec2 p) const;

  double h_fd() const { return 1e-5 * domain.diameter(); }

  // (-X, -Y): forward orbits of the result are backward orbits of *this.
  PiecewiseSystem reversed() const;
  PiecewiseSystem scaled(double c) const;

 private:
  // X f and Y f as polynomials when everything is polynomial.
  std::shared_ptr<const Polynomial2> xf_, yf_;
  std::shared_ptr<const std::pair<Polynomial2, Polynomial2>> gxf_, gyf_;
};

double lie_derivative(const PlanarField& field, const SwitchingFunction& f, Vec2 p, int order,
                      double h_fd = 1e-5);

enum class Region {
  SigmaPlus,
  SigmaMinus,
  CrossingPos,
  CrossingNeg,
  Sliding,
  Escaping,
  Fold,
  TwoFold,
  Degenerate,
};

const char* to_string(Region r);

struct PointClass {
  Region region = Region::Degenerate;
  Which fold_field = Which::X;  // meaningful for Fold only
  bool vis_x = false;           // Fold(X) and TwoFold
  bool vis_y = false;           // Fold(Y) and TwoFold

  bool on_sigma() const { return region != Region::SigmaPlus && region != Region::SigmaMinus; }
  bool tangency() const { return region == Region::Fold || region == Region::TwoFold; }
  // Invisible for both fields: every trajectory through the point is constant.
  bool singular() const { return region == Region::TwoFold && !vis_x && !vis_y; }
  bool visible() const { return fold_field == Which::X ? vis_x : vis_y; }

  std::string label() const;
  bool operator==(const PointClass&) const = default;
};

// Values the classification depends on; exposed so callers can classify
// from cached derivatives.
struct LieSigns {
  double f = 0, xf = 0, yf = 0;
  std::optional<double> x2f, y2f;
};

PointClass classify_values(const LieSigns& s, const Tolerances& tol);
PointClass classify_point(const PiecewiseSystem& sys, Vec2 p, const Tolerances& tol = {});

Vec2 sliding_field(const PiecewiseSystem& sys, Vec2 p, const Tolerances& tol = {});
// Convex weight of X in the sliding field.
double sliding_lambda(const PiecewiseSystem& sys, Vec2 p, const Tolerances& tol = {});

}  // namespace fpe
