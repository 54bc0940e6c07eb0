#include "fpe/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fpe {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::Parse, what); }

Polynomial2 poly_from(const json& j, const std::string& where) {
  if (!j.is_array()) parse_fail(where + ": expected a list of [coeff, degx, degy]");
  std::vector<Monomial> terms;
  for (const auto& t : j) {
    if (!t.is_array() || t.size() != 3 || !t[0].is_number() || !t[1].is_number_integer() ||
        !t[2].is_number_integer())
      parse_fail(where + ": monomial must be [coeff, degx, degy]");
    const int px = t[1].get<int>(), py = t[2].get<int>();
    if (px < 0 || py < 0) parse_fail(where + ": negative degree");
    terms.push_back({t[0].get<double>(), px, py});
  }
  return Polynomial2(std::move(terms));
}

PlanarField field_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) parse_fail(where + ": expected two components");
  return PlanarField(poly_from(j[0], where + "[0]"), poly_from(j[1], where + "[1]"));
}

json traj_json(const SampledTrajectory& g) {
  json pts = json::array();
  for (const auto& p : g.points) pts.push_back({p.x, p.y});
  json dec = json::array();
  for (const auto& d : g.decisions) {
    json e{{"t", d.time}, {"x", d.at.x}, {"y", d.at.y}, {"choice", to_string(d.choice)}};
    if (d.direction != 0) e["direction"] = d.direction;
    if (d.arc >= 0) e["arc"] = d.arc;
    dec.push_back(std::move(e));
  }
  return json{{"system", g.system_name}, {"W", g.window}, {"dt", g.dt}, {"points", pts}, {"decisions", dec}};
}

SampledTrajectory traj_from(const json& j) {
  SampledTrajectory g;
  try {
    g.system_name = j.at("system").get<std::string>();
    g.window = j.at("W").get<double>();
    g.dt = j.at("dt").get<double>();
    for (const auto& p : j.at("points")) g.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& e : j.at("decisions")) {
      BranchDecision d;
      d.time = e.at("t").get<double>();
      d.at = {e.at("x").get<double>(), e.at("y").get<double>()};
      auto c = choice_from_string(e.at("choice").get<std::string>());
      if (!c) parse_fail("unknown choice '" + e.at("choice").get<std::string>() + "'");
      d.choice = *c;
      d.direction = e.value("direction", 0);
      d.arc = e.value("arc", -1);
      g.decisions.push_back(d);
    }
  } catch (const json::exception& ex) {
    parse_fail(std::string("trajectory: ") + ex.what());
  }
  if (g.dt <= 0 || g.points.size() != grid_count(g.window, g.dt))
    parse_fail("trajectory: point count does not match W and dt");
  return g;
}

}  // namespace

PiecewiseSystem parse_system_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    parse_fail(std::string("system file is not JSON: ") + ex.what());
  }
  if (!j.is_object()) parse_fail("system file must hold an object");
  for (const char* k : {"name", "X", "Y", "f", "domain"})
    if (!j.contains(k)) parse_fail(std::string("system file lacks '") + k + "'");
  if (!j["name"].is_string()) parse_fail("name must be a string");
  const auto& d = j["domain"];
  if (!d.is_array() || d.size() != 4) parse_fail("domain must be [xmin,xmax,ymin,ymax]");
  for (const auto& v : d)
    if (!v.is_number()) parse_fail("domain entries must be numbers");
  Rect dom{d[0].get<double>(), d[1].get<double>(), d[2].get<double>(), d[3].get<double>()};
  if (!(dom.xmin < dom.xmax && dom.ymin < dom.ymax)) parse_fail("domain is empty");
  const Polynomial2 f = poly_from(j["f"], "f");
  if (f.degree() < 1) parse_fail("f must be non-constant");
  return PiecewiseSystem(j["name"].get<std::string>(), field_from(j["X"], "X"), field_from(j["Y"], "Y"),
                         SwitchingFunction(f), dom);
}

PiecewiseSystem load_system_file(const std::string& path) { return parse_system_json(read_file(path)); }

std::string trajectories_to_json(const std::vector<SampledTrajectory>& set) {
  json arr = json::array();
  for (const auto& g : set) arr.push_back(traj_json(g));
  return json{{"trajectories", arr}}.dump();
}

std::vector<SampledTrajectory> trajectories_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    parse_fail(std::string("trajectory file is not JSON: ") + ex.what());
  }
  std::vector<SampledTrajectory> out;
  if (j.is_object() && j.contains("trajectories")) {
    for (const auto& t : j["trajectories"]) out.push_back(traj_from(t));
  } else if (j.is_array()) {
    for (const auto& t : j) out.push_back(traj_from(t));
  } else {
    out.push_back(traj_from(j));
  }
  return out;
}

std::string trajectories_to_csv(const std::vector<SampledTrajectory>& set) {
  std::ostringstream os;
  os.precision(17);
  os << "t,x,y,branch_id\n";
  for (std::size_t b = 0; b < set.size(); ++b)
    for (std::size_t i = 0; i < set[b].points.size(); ++i)
      os << set[b].time_of(i) << ',' << set[b].points[i].x << ',' << set[b].points[i].y << ',' << b << '\n';
  return os.str();
}

std::string report_to_json(const EntropyReport& r) {
  json slopes = json::object();
  json per_eps = json::array();
  for (std::size_t e = 0; e < r.eps.size(); ++e) {
    per_eps.push_back({{"eps", r.eps[e]},
                       {"span_slope", r.span_fit[e].slope},
                       {"sep_slope", r.sep_fit[e].slope},
                       {"fit_n", {r.sep_fit[e].first_n, r.sep_fit[e].last_n}},
                       {"max_residual", r.sep_fit[e].max_residual}});
  }
  slopes["per_eps"] = per_eps;
  slopes["increasing"] = r.slopes_increasing;
  slopes["unbounded_threshold"] = r.unbounded_threshold;
  return json{{"system", r.system}, {"eps", r.eps},          {"n", r.n},
              {"span", r.span},     {"sep", r.sep},          {"slopes", slopes},
              {"h_estimate", r.h_estimate}, {"verdict", r.verdict}, {"notes", r.notes}}
      .dump(2);
}

std::string report_to_csv(const EntropyReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "eps,n,span,sep\n";
  for (const auto& c : r.flat()) os << c.eps << ',' << c.n << ',' << c.span_upper << ',' << c.sep_lower << '\n';
  return os.str();
}

std::string witness_to_json(const WitnessReport& r, double J_lo, double J_hi) {
  json pts = json::array();
  for (const auto& w : r.points) {
    json dec = json::array();
    for (const auto& d : w.decisions)
      dec.push_back({{"t", d.time}, {"x", d.at.x}, {"y", d.at.y}, {"choice", to_string(d.choice)}});
    json e{{"x", w.x}, {"found", w.found}, {"decisions", dec}};
    if (w.found) e["return_time"] = w.return_time;
    pts.push_back(std::move(e));
  }
  json out{{"J", {J_lo, J_hi}}, {"all_found", r.all_found}, {"points", pts}};
  if (r.all_found) {
    out["M"] = r.M;
    out["c"] = r.c;
  }
  if (!r.precondition_ok) out["precondition"] = r.precondition_message;
  return out.dump(2);
}

void write_rho_binary(const std::string& path, const std::vector<double>& rho, std::uint32_t count) {
  if (rho.size() != static_cast<std::size_t>(count) * count)
    throw Error(ErrorCode::InvalidArgument, "rho matrix size does not match count");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  const std::uint64_t reserved = 0;
  os.write("RHOM", 4);
  os.write(reinterpret_cast<const char*>(&count), sizeof count);
  os.write(reinterpret_cast<const char*>(&reserved), sizeof reserved);
  os.write(reinterpret_cast<const char*>(rho.data()), static_cast<std::streamsize>(rho.size() * sizeof(double)));
}

std::vector<double> read_rho_binary(const std::string& path, std::uint32_t& count) {
  std::ifstream is(path, std::ios::binary);
  char magic[4];
  std::uint64_t reserved = 0;
  if (!is.read(magic, 4) || std::memcmp(magic, "RHOM", 4) != 0) parse_fail("not an RHOM file");
  is.read(reinterpret_cast<char*>(&count), sizeof count);
  is.read(reinterpret_cast<char*>(&reserved), sizeof reserved);
  std::vector<double> rho(static_cast<std::size_t>(count) * count);
  if (!is.read(reinterpret_cast<char*>(rho.data()), static_cast<std::streamsize>(rho.size() * sizeof(double))))
    parse_fail("truncated RHOM file");
  return rho;
}

std::string rho_to_csv(const std::vector<double>& rho, std::uint32_t count) {
  std::ostringstream os;
  os.precision(17);
  os << "i,j,rho\n";
  for (std::uint32_t i = 0; i < count; ++i)
    for (std::uint32_t j = 0; j < count; ++j) os << i << ',' << j << ',' << rho[std::size_t{i} * count + j] << '\n';
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Parse, "cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  os << content;
}

}  // namespace fpe
