#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fpe/systems.hpp"

using namespace fpe;

TEST_CASE("bean parabola: X-arc from (-1/2, 0) lands at (1/2, 0) at t = 1") {
  const auto sys = build_bean().system;
  // y = 1/4 - x^2 with x = -1/2 + t.
  const auto r = flow_smooth(sys.X, {-0.5, 0.0}, 5.0, 1e-2, sys.f, {}, sys.domain, +1);
  REQUIRE(r.event);
  CHECK_FALSE(r.event->graze);
  CHECK(r.event->time == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.event->point.x == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(std::abs(r.event->point.y) < 1e-12);
  CHECK(r.arc.size() == 101);
  CHECK(r.arc[50].y == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("raw rosette lens reaches (2, 0) at t = 2 with apex (1, 1/2)") {
  const auto one = Polynomial2::constant(1.0), x = Polynomial2::x();
  const PlanarField X(one, one - x);
  const auto r = flow_smooth(X, {0.0, 0.0}, 10.0, 1e-3, SwitchingFunction(), {}, std::nullopt, +1);
  REQUIRE(r.event);
  CHECK(r.event->time == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(r.event->point.x == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(r.arc[1000].x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.arc[1000].y == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("graze: an arc touching the switching curve tangentially") {
  // X = (1, -x) from (-1, 1/2): y = (1 - x^2)/2 ... shifted so the minimum sits on y = 0.
  const auto one = Polynomial2::constant(1.0), x = Polynomial2::x();
  const PlanarField X(one, x);
  // y = x^2/2 from x = -1 touches y = 0 at the origin, t = 1.
  const auto r = flow_smooth(X, {-1.0, 0.5}, 3.0, 1e-2, SwitchingFunction(), {}, std::nullopt, +1);
  REQUIRE(r.event);
  CHECK(r.event->graze);
  CHECK(r.event->time == doctest::Approx(1.0).epsilon(1e-6));
}

namespace {
std::multiset<Choice> choices(const std::vector<Continuation>& c) {
  std::multiset<Choice> s;
  for (const auto& x : c) s.insert(x.decision.choice);
  return s;
}
}  // namespace

TEST_CASE("continuations at the distinguished bean points") {
  const auto sys = build_bean().system;
  auto esc = step_filippov(sys, {-0.5, 0.0}, 0.0);
  CHECK(choices(esc) == std::multiset<Choice>{Choice::FollowX, Choice::FollowY, Choice::Slide});
  // Z^s = (-1, 0) and the tangent (-grad_y, grad_x) is (-1, 0).
  CHECK(esc.back().decision.direction == +1);
  const Vec2 T{-sys.f.grad({-0.5, 0}).y, sys.f.grad({-0.5, 0}).x};
  CHECK(dot(sliding_field(sys, {-0.5, 0.0}), T) * esc.back().decision.direction > 0);

  CHECK(choices(step_filippov(sys, {0.0, 0.0}, 0.0)) ==
        std::multiset<Choice>{Choice::FollowY, Choice::Slide});
  CHECK(choices(step_filippov(sys, {-1.0 / std::sqrt(2.0), 0.0}, 0.0)) ==
        std::multiset<Choice>{Choice::FollowX});
  CHECK(choices(step_filippov(sys, {0.4, 0.0}, 0.0)) == std::multiset<Choice>{Choice::Slide});
  CHECK(choices(step_filippov(sys, {-0.9, 0.0}, 0.0)) == std::multiset<Choice>{Choice::FollowX});
  CHECK_THROWS_AS(step_filippov(sys, {0.0, 0.5}, 0.0), Error);

  const auto ros = build_rosette(3).base;
  CHECK(choices(step_filippov(ros, {1.0, 0.0}, 0.0)) == std::multiset<Choice>{Choice::StayFixed});
  const auto f8 = build_figure8().system;
  CHECK(choices(step_filippov(f8, {0.0, 0.0}, 0.0)) ==
        std::multiset<Choice>{Choice::FollowX, Choice::FollowY});
}

TEST_CASE("slide segment: exit candidates every grid step of sliding time") {
  const auto sys = build_bean().system;
  BranchPolicy pol;
  pol.slide_exit_grid = 0.1;
  const auto r = slide_segment(sys, {-0.5, 0.0}, -1, 1e-2, 10.0, pol);
  CHECK(r.reached_boundary);
  CHECK(r.end.x == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-6));
  // dx/dt = -(1 + 2x^2) / (2(1 - x^2)): sliding time from -1/2 to -1/sqrt(2).
  double L = 0.0;
  const int K = 200000;
  const double a = -0.5, b = -1.0 / std::sqrt(2.0);
  for (int i = 0; i < K; ++i) {
    const double x = a + (b - a) * (i + 0.5) / K;
    L += std::abs((b - a) / K) * 2 * (1 - x * x) / (1 + 2 * x * x);
  }
  CHECK(r.duration == doctest::Approx(L).epsilon(1e-6));
  CHECK(r.exits.size() == static_cast<std::size_t>(std::floor(L / 0.1)) + 1);
  for (const auto& [t, p] : r.exits) CHECK(std::abs(p.y) < 1e-9);
}

TEST_CASE("grid arithmetic") {
  CHECK(grid_count(0.0, 0.01) == 1);
  CHECK(grid_count(3.0, 0.01) == 601);
  CHECK(grid_count(8.0, 1e-3) == 16001);
}

TEST_CASE("W = 0 gives single-sample trajectories") {
  const auto sys = build_bean().system;
  BranchPolicy pol;
  pol.horizon = 0.0;
  const auto set = generate_trajectories(sys, {{-0.5, 0.0}}, pol, 1e-2);
  REQUIRE(!set.trajectories.empty());
  for (const auto& g : set.trajectories) CHECK(g.points.size() == 1);
}

TEST_CASE("bean tree from one escaping seed grows until the budget") {
  const auto sys = build_bean().system;
  BranchPolicy pol;
  pol.horizon = 3.0;
  std::size_t prev = 0;
  for (int budget : {1, 3, 9, 27, 81}) {
    pol.max_branches = budget;
    const auto set = generate_trajectories(sys, {{-0.3, 0.0}}, pol, 1e-2);
    CHECK(set.trajectories.size() <= static_cast<std::size_t>(budget));
    CHECK(set.trajectories.size() >= prev);
    prev = set.trajectories.size();
    CHECK(set.budget_exceeded);
  }
  CHECK(prev > 27);
}

TEST_CASE("generated bean trajectories stay in K and hit the time grid") {
  const auto bb = build_bean();
  BranchPolicy pol;
  pol.horizon = 4.0;
  pol.max_branches = 200;
  const auto set = generate_trajectories(bb.system, {{-0.3, 0.0}, {0.4, 0.0}, {0.0, 0.5}}, pol, 1e-2);
  CHECK(set.trajectories.size() > 100);
  for (const auto& g : set.trajectories) {
    CHECK(g.points.size() == grid_count(4.0, 1e-2));
    CHECK(std::is_sorted(g.decisions.begin(), g.decisions.end(),
                         [](const auto& a, const auto& b) { return a.time < b.time; }));
  }
  const auto inv = check_invariant_set(bb.system, bb.in_K, set.trajectories);
  CHECK(inv.invariant);
  CHECK(inv.checked > 0);
}

TEST_CASE("deduplication merges identical sample sequences") {
  const auto sys = build_bean().system;
  BranchPolicy pol;
  pol.horizon = 2.0;
  pol.max_branches = 50;
  const auto set = generate_trajectories(sys, {{-0.3, 0.0}, {-0.3, 0.0}}, pol, 1e-2);
  pol.dedupe = false;
  const auto raw = generate_trajectories(sys, {{-0.3, 0.0}, {-0.3, 0.0}}, pol, 1e-2);
  CHECK(raw.trajectories.size() == 2 * set.trajectories.size());
}

TEST_CASE("domain exit is reported, or frozen on request") {
  const auto node = build_node0();
  BranchPolicy pol;
  pol.horizon = 6.0;
  CHECK_THROWS_AS(generate_trajectories(node, {{0.5, 0.0}}, pol, 1e-2), Error);
  pol.freeze_on_domain_exit = true;
  const auto set = generate_trajectories(node, {{0.5, 0.0}}, pol, 1e-2);
  CHECK(set.frozen > 0);
}

TEST_CASE("stationary singular tangency stays fixed") {
  const auto ros = build_rosette(3).base;
  BranchPolicy pol;
  pol.horizon = 2.0;
  const auto set = generate_trajectories(ros, {{1.0, 0.0}}, pol, 1e-2);
  REQUIRE(set.trajectories.size() == 1);
  for (const auto& p : set.trajectories[0].points) CHECK(p == Vec2{1.0, 0.0});
}
