#include <doctest.h>

#include <cstdio>
#include <string>

#include "fpe/io.hpp"

using namespace fpe;

namespace {
std::string tmp_path(const char* name) { return std::string("/tmp/fpe_test_") + name; }

const char* kBean = R"({
  "name": "bean-file",
  "X": [[[1, 0, 0]], [[-2, 1, 0]]],
  "Y": [[[-2, 0, 0]], [[-4, 3, 0], [2, 1, 0]]],
  "f": [[1, 0, 1]],
  "domain": [-1.2, 1.2, -1.2, 1.2]
})";
}  // namespace

TEST_CASE("system file parses into the same fields as the built-in bean") {
  const auto sys = parse_system_json(kBean);
  const auto ref = build_bean().system;
  CHECK(sys.name == "bean-file");
  for (Vec2 p : {Vec2{0.3, -0.4}, Vec2{-0.9, 0.2}}) {
    CHECK(sys.X(p).y == doctest::Approx(ref.X(p).y));
    CHECK(sys.Y(p).y == doctest::Approx(ref.Y(p).y));
    CHECK(sys.f(p) == doctest::Approx(ref.f(p)));
  }
  CHECK(classify_point(sys, {-0.5, 0}).region == Region::Escaping);
}

TEST_CASE("malformed system files are parse errors") {
  for (const char* bad : {"", "[]", "{\"name\": \"x\"}",
                          R"({"name":"x","X":[[[1,0,0]]],"Y":[[[1,0,0]],[[1,0,0]]],"f":[[1,0,1]],"domain":[0,1,0,1]})",
                          R"({"name":"x","X":[[[1,0,0]],[[1,0,0]]],"Y":[[[1,0,0]],[[1,0,0]]],"f":[[1,0,1]],"domain":[1,0,0,1]})",
                          R"({"name":"x","X":[[[1,0,0]],[[1,-1,0]]],"Y":[[[1,0,0]],[[1,0,0]]],"f":[[1,0,1]],"domain":[0,1,0,1]})",
                          R"({"name":"x","X":[[[1,0,0]],[[1,0,0]]],"Y":[[[1,0,0]],[[1,0,0]]],"f":[[3,0,0]],"domain":[0,1,0,1]})"}) {
    CAPTURE(bad);
    try {
      parse_system_json(bad);
      FAIL("accepted malformed input");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Parse);
    }
  }
}

TEST_CASE("trajectory JSON round trip is exact") {
  const auto sys = build_bean().system;
  BranchPolicy pol;
  pol.horizon = 3;
  pol.max_branches = 6;
  const auto set = generate_trajectories(sys, {{-0.3, 0.0}}, pol, 0.01).trajectories;
  const auto back = trajectories_from_json(trajectories_to_json(set));
  REQUIRE(back.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(back[i].points == set[i].points);
    CHECK(back[i].decisions == set[i].decisions);
    CHECK(back[i].window == set[i].window);
    CHECK(back[i].dt == set[i].dt);
  }
  CHECK_THROWS_AS(trajectories_from_json("{\"system\":\"b\",\"W\":1,\"dt\":0.5,\"points\":[[0,0]],\"decisions\":[]}"),
                  Error);
}

TEST_CASE("trajectory CSV layout") {
  SampledTrajectory g;
  g.window = 1;
  g.dt = 0.5;
  g.points = {{0, 0}, {1, 2}, {3, 4}, {5, 6}, {7, 8}};
  const auto csv = trajectories_to_csv({g, g});
  CHECK(csv.rfind("t,x,y,branch_id\n-1,0,0,0\n-0.5,1,2,0\n", 0) == 0);
  CHECK(csv.find("\n1,7,8,1\n") != std::string::npos);
}

TEST_CASE("RHOM binary round trip") {
  const std::vector<double> m{0, 1.5, 1.5, 0};
  const auto p = tmp_path("rho.bin");
  write_rho_binary(p, m, 2);
  CHECK(read_file(p).size() == 16 + 4 * sizeof(double));
  CHECK(read_file(p).substr(0, 4) == "RHOM");
  std::uint32_t n = 0;
  CHECK(read_rho_binary(p, n) == m);
  CHECK(n == 2);
  CHECK(rho_to_csv(m, 2) == "i,j,rho\n0,0,0\n0,1,1.5\n1,0,1.5\n1,1,0\n");
  std::remove(p.c_str());
}

TEST_CASE("entropy report serialisation") {
  std::vector<CapacityCounts> cs;
  for (int n = 1; n <= 3; ++n) cs.push_back({0.5, n, 1L << n, 1L << n});
  auto r = fit_entropy(cs);
  r.system = "demo";
  const auto js = report_to_json(r);
  CHECK(js.find("\"verdict\"") != std::string::npos);
  CHECK(js.find("\"h_estimate\"") != std::string::npos);
  CHECK(report_to_csv(r) == "eps,n,span,sep\n0.5,1,2,2\n0.5,2,4,4\n0.5,3,8,8\n");
}
