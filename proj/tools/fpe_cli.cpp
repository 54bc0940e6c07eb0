// fpe: Filippov planar entropy toolkit.
//
// Exit codes: 0 ok, 1 internal error, 2 bad input (unknown system, malformed
// file, invalid arguments, J outside the escaping region), 3 branch budget
// exceeded (without --allow-partial), 4 insufficient data for a fit,
// 5 verifier found a sample without a witness.
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpe/experiments.hpp"
#include "fpe/io.hpp"
#include "fpe/simd/interval_kernels.hpp"

using namespace fpe;

namespace {

struct Options {
  std::string system, system_file;
  double dt = 0.0;
  double W = -1.0;
  std::vector<double> eps;
  std::string n_range;
  int branch_max = 20000;
  double slide_exit_grid = 0.1;
  std::string out, format = "json";
  bool allow_partial = false;
  std::string J = "-0.6:-0.1";
  int samples = 32;
  double horizon = 20.0;
  int sigma_samples = 100;
  std::vector<std::string> seeds;
  std::string trajectory_file, rho_out;
};

struct Exit {
  int code;
};

void kv(const std::string& k, const std::string& v) { std::cout << k << '=' << v << '\n'; }
template <class T>
void kv(const std::string& k, T v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  kv(k, os.str());
}

PiecewiseSystem load_system(const Options& o) {
  if (!o.system_file.empty()) return load_system_file(o.system_file);
  if (o.system.empty()) throw Error(ErrorCode::InvalidArgument, "--system or --system-file is required");
  return system_by_name(o.system);
}

int rosette_alpha(const std::string& name) {
  if (name.rfind("rosette:", 0) != 0) return 0;
  system_by_name(name);  // validates
  return std::stoi(name.substr(8));
}

std::pair<double, double> parse_pair(const std::string& s, char sep) {
  const auto k = s.find(sep);
  if (k == std::string::npos) throw Error(ErrorCode::InvalidArgument, "expected a" + std::string(1, sep) + "b, got '" + s + "'");
  try {
    return {std::stod(s.substr(0, k)), std::stod(s.substr(k + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "not a number pair: '" + s + "'");
  }
}

std::vector<int> parse_n(const std::string& s) {
  if (s.empty()) return {};
  std::vector<int> n;
  try {
    if (s.find(':') != std::string::npos) {
      const auto [a, b] = parse_pair(s, ':');
      for (int k = static_cast<int>(a); k <= static_cast<int>(b); ++k) n.push_back(k);
    } else {
      std::stringstream ss(s);
      for (std::string t; std::getline(ss, t, ',');) n.push_back(std::stoi(t));
    }
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::InvalidArgument, "bad --n '" + s + "'");
  }
  for (int k : n)
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  return n;
}

std::vector<Vec2> parse_seeds(const std::vector<std::string>& in) {
  std::vector<Vec2> out;
  for (const auto& s : in) {
    if (s == "origin") out.push_back({0, 0});
    else {
      const auto [x, y] = parse_pair(s, ',');
      out.push_back({x, y});
    }
  }
  return out;
}

void write_out(const Options& o, const std::string& json, const std::string& csv) {
  if (o.out.empty()) return;
  write_file(o.out, o.format == "csv" ? csv : json);
  kv("out", o.out);
}

// ------------------------------------------------------------------ classify

int cmd_classify(const Options& o) {
  const auto sys = load_system(o);
  const Rect& d = sys.domain;
  std::ostringstream csv;
  csv.precision(12);
  csv << "x,y,region,label\n";
  std::size_t rows = 0, esc = 0, sl = 0, cr = 0, tang = 0;
  for (int i = 0; i < o.sigma_samples; ++i) {
    // Column x_i, all zeros of y -> f(x_i, y) by scan and bisection.
    const double x = d.xmin + (d.xmax - d.xmin) * (i + 0.5) / o.sigma_samples;
    const int K = 400;
    double ya = d.ymin, fa = sys.f({x, ya});
    for (int k = 1; k <= K; ++k) {
      const double yb = d.ymin + (d.ymax - d.ymin) * k / K, fb = sys.f({x, yb});
      std::optional<double> root;
      if (fa == 0) root = ya;
      else if (fa * fb < 0) {
        double lo = ya, hi = yb;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
          const double mid = 0.5 * (lo + hi);
          (sys.f({x, mid}) * fa > 0 ? lo : hi) = mid;
        }
        root = 0.5 * (lo + hi);
      }
      if (root) {
        const auto c = classify_point(sys, {x, *root});
        csv << x << ',' << *root << ',' << to_string(c.region) << ',' << c.label() << '\n';
        ++rows;
        esc += c.region == Region::Escaping;
        sl += c.region == Region::Sliding;
        cr += c.region == Region::CrossingPos || c.region == Region::CrossingNeg;
        tang += c.tangency();
      }
      ya = yb;
      fa = fb;
    }
  }
  if (o.out.empty()) std::cout << csv.str();
  else write_file(o.out, csv.str());
  kv("rows", rows);
  kv("escaping", esc);
  kv("sliding", sl);
  kv("crossing", cr);
  kv("tangency", tang);
  return 0;
}

// ------------------------------------------------------------------ simulate

int cmd_simulate(const Options& o) {
  const std::string name = o.system_file.empty() ? o.system : load_system(o).name;
  const int alpha = o.system_file.empty() ? rosette_alpha(o.system) : 0;
  std::vector<SampledTrajectory> trajs;
  bool exceeded = false;
  std::string invariant = "unchecked";
  const double W = o.W >= 0 ? o.W : 6.0;

  if (alpha > 0 || name == "figure8") {
    // Arc-library systems: every forward itinerary of W unit arcs from the origin.
    if (std::floor(W) != W) throw Error(ErrorCode::InvalidArgument, "--W must be an integer for arc systems");
    const double dt = o.dt > 0 ? o.dt : 0.01;
    const ArcLibrary lib = alpha > 0 ? build_rosette(alpha).arcs.resampled(dt) : build_figure8().arcs.resampled(dt);
    auto s = arc_itinerary_set(lib, static_cast<int>(W), static_cast<std::size_t>(o.branch_max), name);
    trajs = std::move(s.trajectories);
    exceeded = s.budget_exceeded;
    kv("itineraries", s.total);
  } else {
    const auto sys = load_system(o);
    auto seeds = parse_seeds(o.seeds);
    if (seeds.empty()) seeds = default_sampled_setup(name).seeds;
    if (seeds.empty()) throw Error(ErrorCode::InvalidArgument, "--seed is required for this system");
    BranchPolicy pol = default_sampled_setup(name).policy;
    pol.horizon = W;
    pol.max_branches = o.branch_max;
    pol.slide_exit_grid = o.slide_exit_grid;
    auto set = generate_trajectories(sys, seeds, pol, o.dt > 0 ? o.dt : 0.01);
    trajs = std::move(set.trajectories);
    exceeded = set.budget_exceeded;
    if (set.frozen) kv("frozen", set.frozen);
    if (name == "bean") {
      const auto rep = check_invariant_set(sys, build_bean().in_K, trajs);
      invariant = rep.invariant ? "true" : "false";
      kv("invariant_checked", rep.checked);
    }
  }
  kv("trajectories", trajs.size());
  kv("budget_exceeded", exceeded ? "true" : "false");
  kv("invariant", invariant);
  write_out(o, trajectories_to_json(trajs), trajectories_to_csv(trajs));
  if (exceeded && !o.allow_partial) {
    std::cerr << "branch budget exceeded (use --allow-partial to accept)\n";
    return 3;
  }
  return 0;
}

// ------------------------------------------------------------------ entropy

void print_report(const EntropyReport& r, std::size_t count) {
  for (std::size_t e = 0; e < r.eps.size(); ++e) {
    std::ostringstream row;
    for (std::size_t k = 0; k < r.n.size(); ++k) row << (k ? "," : "") << r.sep[e][k];
    std::ostringstream key;
    key << "sep[eps=" << r.eps[e] << "]";
    kv(key.str(), row.str());
    std::ostringstream sk;
    sk << "slope[eps=" << r.eps[e] << "]";
    kv(sk.str(), r.sep_fit[e].slope);
  }
  kv("items", count);
  kv("slopes_increasing", r.slopes_increasing ? "true" : "false");
  kv("h_estimate", r.h_estimate);
  kv("verdict", r.verdict);
}

int cmd_entropy(const Options& o) {
  EntropyReport rep;
  std::size_t items = 0;
  const std::string name = o.system_file.empty() ? o.system : load_system(o).name;
  const int alpha = o.system_file.empty() ? rosette_alpha(o.system) : 0;
  auto n = parse_n(o.n_range);

  if (o.trajectory_file.empty() && (alpha > 0 || name == "figure8")) {
    const ArcLibrary lib = alpha > 0 ? build_rosette(alpha).arcs : build_figure8().arcs;
    std::vector<int> sym(lib.alpha);
    for (int k = 0; k < lib.alpha; ++k) sym[k] = k;
    auto eps = o.eps;
    if (eps.empty())
      for (int k = 1; k <= 3; ++k) eps.push_back(std::ldexp(lib.mu, -k));
    if (n.empty()) n = {1, 2, 3, 4};
    const int hi = std::min(12, n.back() + 3);
    if (std::pow(lib.alpha, hi + 1) > 2e6) throw Error(ErrorCode::InvalidArgument, "too many itineraries");
    rep = symbolic_entropy(lib, sym, 0, hi, eps, n, 1, name);
    items = static_cast<std::size_t>(std::pow(lib.alpha, hi + 1));
    kv("mu", lib.mu);
  } else {
    const auto sys = load_system(o);
    auto setup = default_sampled_setup(name);
    if (!o.eps.empty()) setup.eps = o.eps;
    if (!n.empty()) setup.n = n;
    if (o.W >= 0) setup.policy.horizon = o.W;
    if (o.dt > 0) setup.dt = o.dt;
    setup.policy.max_branches = o.branch_max;
    setup.policy.slide_exit_grid = o.slide_exit_grid;
    auto seeds = parse_seeds(o.seeds);
    if (!seeds.empty()) setup.seeds = seeds;
    std::vector<SampledTrajectory> set;
    if (!o.trajectory_file.empty()) {
      set = trajectories_from_json(read_file(o.trajectory_file));
    } else {
      if (setup.seeds.empty()) throw Error(ErrorCode::InvalidArgument, "--seed is required for this system");
      auto ts = generate_trajectories(sys, setup.seeds, setup.policy, setup.dt);
      if (ts.budget_exceeded) kv("budget_exceeded", "true");
      set = std::move(ts.trajectories);
    }
    if (set.size() < 2) throw Error(ErrorCode::InsufficientData, "fewer than two trajectories");
    const auto cfg = TrajectoryMetricConfig::for_set(set, sys.domain.diameter());
    int n_max = 1;
    for (int k : setup.n) n_max = std::max(n_max, k);
    const DenseDnTable tab(set, cfg, n_max);
    check_eps_schedule(setup.eps, tab.resolution());
    rep = count_and_fit(tab, setup.eps, setup.n, name);
    items = set.size();
    kv("truncation", tab.truncation());
    kv("resolution", tab.resolution());
    kv("isa", simd::isa_name(simd::active_isa()));
    if (!o.rho_out.empty()) {
      const auto N = static_cast<std::uint32_t>(set.size());
      std::vector<double> m(static_cast<std::size_t>(N) * N);
      for (std::uint32_t a = 0; a < N; ++a)
        for (std::uint32_t b = 0; b < N; ++b) m[std::size_t{a} * N + b] = tab.rho0(a, b);
      write_rho_binary(o.rho_out, m, N);
      write_file(o.rho_out + ".csv", rho_to_csv(m, N));
      kv("rho_out", o.rho_out);
    }
  }
  rep.system = name;
  print_report(rep, items);
  if (alpha > 0) std::printf("h ≈ %.4f (log %d = %.4f)\n", rep.h_estimate, alpha, std::log(alpha));
  else std::printf("h ≈ %.4f\n", rep.h_estimate);
  if (!o.out.empty()) {
    write_file(o.out, o.format == "csv" ? report_to_csv(rep) : report_to_json(rep));
    if (o.format != "csv") write_file(o.out + ".csv", report_to_csv(rep));
    kv("out", o.out);
  }
  return 0;
}

// ------------------------------------------------------------------ verify

int cmd_verify(const Options& o) {
  const auto sys = load_system(o);
  const auto [lo, hi] = parse_pair(o.J, ':');
  if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "J must satisfy lo < hi");
  const auto rep = verify_sufficient_conditions(sys, lo, hi, o.samples, o.horizon, o.dt > 0 ? o.dt : 1e-2,
                                                o.slide_exit_grid);
  if (!o.out.empty()) write_file(o.out, witness_to_json(rep, lo, hi));
  if (!rep.precondition_ok) {
    std::cerr << rep.precondition_message << '\n';
    kv("precondition", "false");
    return 2;
  }
  std::size_t found = 0;
  for (const auto& w : rep.points) {
    found += w.found;
    if (!w.found) kv("missing_x", w.x);
  }
  kv("samples", rep.points.size());
  kv("witnessed", found);
  kv("all_found", rep.all_found ? "true" : "false");
  if (rep.all_found) {
    kv("M", rep.M);
    kv("c", rep.c);
  }
  return rep.all_found ? 0 : 5;
}

int code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::Parse:
    case ErrorCode::InvalidArgument:
    case ErrorCode::DegeneratePoint:
    case ErrorCode::WindowExceeded: return 2;
    case ErrorCode::BranchBudgetExceeded: return 3;
    case ErrorCode::InsufficientData: return 4;
    case ErrorCode::NoReturnInWindow: return 5;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topological entropy of planar Filippov systems"};
  app.set_config("--config", "", "TOML/INI file with option defaults (flags win)");
  app.require_subcommand(1);
  Options o;

  auto add_system = [&](CLI::App* c) {
    c->add_option("--system", o.system, "bean | figure8 | node0 | smooth-rot | rosette:<alpha>");
    c->add_option("--system-file", o.system_file, "JSON system definition");
  };
  auto add_branching = [&](CLI::App* c) {
    c->add_option("--dt", o.dt, "sample step");
    c->add_option("--W", o.W, "window half-width");
    c->add_option("--branch-max", o.branch_max, "branch budget")->check(CLI::PositiveNumber);
    c->add_option("--slide-exit-grid", o.slide_exit_grid, "exit-candidate spacing along sliding segments")
        ->check(CLI::PositiveNumber);
    c->add_option("--seed", o.seeds, "seed point 'x,y' or 'origin' (repeatable)");
  };
  auto add_out = [&](CLI::App* c) {
    c->add_option("--out", o.out, "output file");
    c->add_option("--format", o.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  };

  auto* classify = app.add_subcommand("classify", "classify sample points of the switching curve");
  add_system(classify);
  classify->add_option("--sigma-samples", o.sigma_samples, "number of sample columns")->check(CLI::NonNegativeNumber);
  add_out(classify);

  auto* simulate = app.add_subcommand("simulate", "generate branching trajectories");
  add_system(simulate);
  add_branching(simulate);
  add_out(simulate);
  simulate->add_flag("--allow-partial", o.allow_partial, "accept a truncated branch set");

  auto* entropy = app.add_subcommand("entropy", "capacity counts, growth fits and verdict");
  add_system(entropy);
  add_branching(entropy);
  add_out(entropy);
  entropy->add_option("--eps", o.eps, "eps values (decreasing)");
  entropy->add_option("--n", o.n_range, "n range 'a:b' or list 'a,b,c'");
  entropy->add_option("--trajectory-file", o.trajectory_file, "reuse trajectories written by simulate");
  entropy->add_option("--rho-out", o.rho_out, "write the rho matrix (RHOM binary plus .csv)");

  auto* verify = app.add_subcommand("verify", "sampled check of the sufficient conditions");
  add_system(verify);
  verify->add_option("--J", o.J, "escaping interval 'lo:hi' on y = 0");
  verify->add_option("--samples", o.samples, "sample points in J")->check(CLI::PositiveNumber);
  verify->add_option("--horizon", o.horizon, "search horizon")->check(CLI::PositiveNumber);
  verify->add_option("--dt", o.dt, "sample step");
  verify->add_option("--slide-exit-grid", o.slide_exit_grid, "exit-candidate spacing");
  verify->add_option("--out", o.out, "witness report (JSON)");

  auto* list = app.add_subcommand("list-systems", "print the built-in systems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*list) {
      for (const auto& s : list_systems()) std::cout << s << '\n';
      kv("systems", list_systems().size());
      return 0;
    }
    if (*classify) return cmd_classify(o);
    if (*simulate) return cmd_simulate(o);
    if (*entropy) return cmd_entropy(o);
    if (*verify) return cmd_verify(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    kv("error", to_string(e.code()));
    return code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
