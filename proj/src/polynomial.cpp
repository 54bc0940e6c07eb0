#include "fpe/polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace fpe {

Polynomial2::Polynomial2(std::vector<Monomial> terms) : terms_(std::move(terms)) {
  normalize();
}

Polynomial2 Polynomial2::constant(double c) { return Polynomial2({{c, 0, 0}}); }

void Polynomial2::normalize() {
  std::sort(terms_.begin(), terms_.end(), [](const Monomial& a, const Monomial& b) {
    return a.px != b.px ? a.px < b.px : a.py < b.py;
  });
  std::vector<Monomial> out;
  for (const auto& m : terms_) {
    if (!out.empty() && out.back().px == m.px && out.back().py == m.py)
      out.back().coeff += m.coeff;
    else
      out.push_back(m);
  }
  std::erase_if(out, [](const Monomial& m) { return m.coeff == 0.0; });
  terms_ = std::move(out);
}

double Polynomial2::operator()(Vec2 p) const {
  double s = 0.0;
  for (const auto& m : terms_) {
    double v = m.coeff;
    for (int i = 0; i < m.px; ++i) v *= p.x;
    for (int i = 0; i < m.py; ++i) v *= p.y;
    s += v;
  }
  return s;
}

Polynomial2 Polynomial2::dx() const {
  std::vector<Monomial> t;
  for (const auto& m : terms_)
    if (m.px > 0) t.push_back({m.coeff * m.px, m.px - 1, m.py});
  return Polynomial2(std::move(t));
}

Polynomial2 Polynomial2::dy() const {
  std::vector<Monomial> t;
  for (const auto& m : terms_)
    if (m.py > 0) t.push_back({m.coeff * m.py, m.px, m.py - 1});
  return Polynomial2(std::move(t));
}

Polynomial2 Polynomial2::operator+(const Polynomial2& o) const {
  auto t = terms_;
  t.insert(t.end(), o.terms_.begin(), o.terms_.end());
  return Polynomial2(std::move(t));
}

Polynomial2 Polynomial2::operator-(const Polynomial2& o) const { return *this + (-o); }

Polynomial2 Polynomial2::operator*(const Polynomial2& o) const {
  std::vector<Monomial> t;
  t.reserve(terms_.size() * o.terms_.size());
  for (const auto& a : terms_)
    for (const auto& b : o.terms_) t.push_back({a.coeff * b.coeff, a.px + b.px, a.py + b.py});
  return Polynomial2(std::move(t));
}

Polynomial2 Polynomial2::operator*(double s) const {
  auto t = terms_;
  for (auto& m : t) m.coeff *= s;
  return Polynomial2(std::move(t));
}

int Polynomial2::degree() const {
  int d = 0;
  for (const auto& m : terms_) d = std::max(d, m.px + m.py);
  return d;
}

}  // namespace fpe
