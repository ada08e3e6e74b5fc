#include "reif/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace reif {

double sig12(double x) {
  if (!std::isfinite(x)) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

namespace {

json rounded(const json& j) {
  if (j.is_number_float()) {
    double v = j.get<double>();
    if (!std::isfinite(v)) return nullptr;
    return sig12(v);
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& e : j) out.push_back(rounded(e));
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = rounded(it.value());
    return out;
  }
  return j;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from(const json& a, int dim, const std::string& what) {
  if (!a.is_array()) throw std::invalid_argument(what + " must be an array");
  if (static_cast<int>(a.size()) != dim) {
    throw std::invalid_argument(what + " has " + std::to_string(a.size()) + " entries, expected " +
                                std::to_string(dim));
  }
  Vec v(dim);
  for (int i = 0; i < dim; ++i) {
    if (!a[i].is_number()) throw std::invalid_argument(what + " entries must be numbers");
    v[i] = a[i].get<double>();
  }
  return v;
}

json ball_json(const Ball& b) {
  return {{"center", vec_json(b.center)}, {"radius", b.radius}, {"stage", b.stage}, {"atom", b.atom}};
}

json balls_json(const std::vector<Ball>& balls) {
  json a = json::array();
  for (const Ball& b : balls) a.push_back(ball_json(b));
  return a;
}

}  // namespace

std::string dump_json(const json& j) { return rounded(j).dump(2) + "\n"; }

json space_to_json(const NormedSpace& space) {
  json p;
  if (space.p().is_inf()) {
    p = "inf";
  } else if (space.p().den() == 1) {
    p = space.p().num();
  } else {
    p = space.p().value();
  }
  return {{"dim", space.dim()}, {"norm", {{"type", "lp"}, {"p", p}}}};
}

NormedSpace space_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dim") || !j["dim"].is_number_integer()) {
    throw std::invalid_argument("space needs an integer \"dim\"");
  }
  int dim = j["dim"].get<int>();
  if (dim < 1) throw std::invalid_argument("space dim must be positive");
  if (!j.contains("norm") || !j["norm"].is_object()) throw std::invalid_argument("space needs a \"norm\" object");
  const json& n = j["norm"];
  if (n.value("type", std::string("lp")) != "lp") throw std::invalid_argument("only lp norms are supported");
  if (!n.contains("p")) throw std::invalid_argument("norm needs \"p\"");
  const json& p = n["p"];
  if (p.is_string()) return NormedSpace(dim, Exponent::parse(p.get<std::string>()));
  if (p.is_number()) return NormedSpace(dim, Exponent::from_double(p.get<double>()));
  throw std::invalid_argument("norm p must be a number or \"inf\"");
}

json measure_to_json(const NormedSpace& space, const PointMeasure& mu, const std::vector<double>& r_s) {
  json atoms = json::array();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    json a = {{"x", vec_json(mu.point(i))}, {"w", mu.weight(i)}};
    if (i < r_s.size()) a["r"] = r_s[i];
    atoms.push_back(a);
  }
  return {{"space", space_to_json(space)}, {"atoms", atoms}};
}

MeasureFile measure_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("measure must be a JSON object");
  if (!j.contains("space")) throw std::invalid_argument("measure needs \"space\"");
  if (!j.contains("atoms") || !j["atoms"].is_array()) throw std::invalid_argument("measure needs an \"atoms\" array");
  MeasureFile out;
  out.space = space_from_json(j["space"]);
  out.mu = PointMeasure(out.space.dim());
  std::size_t i = 0;
  for (const json& a : j["atoms"]) {
    std::string where = "atoms[" + std::to_string(i++) + "]";
    if (!a.is_object() || !a.contains("x")) throw std::invalid_argument(where + " needs \"x\"");
    Vec x = vec_from(a["x"], out.space.dim(), where + ".x");
    double w = 1.0;
    if (a.contains("w")) {
      if (!a["w"].is_number()) throw std::invalid_argument(where + ".w must be a number");
      w = a["w"].get<double>();
    }
    if (!(w >= 0) || !std::isfinite(w)) throw std::invalid_argument(where + ".w must be finite and >= 0");
    double r = 0.0;
    if (a.contains("r")) {
      if (!a["r"].is_number()) throw std::invalid_argument(where + ".r must be a number");
      r = a["r"].get<double>();
    }
    out.mu.add(x, w);
    out.r_s.push_back(r);
  }
  return out;
}

json plane_to_json(const AffinePlane& plane) {
  json basis = json::array();
  for (Eigen::Index c = 0; c < plane.basis.cols(); ++c) basis.push_back(vec_json(plane.basis.col(c)));
  return {{"base", vec_json(plane.base)}, {"basis", basis}};
}

json ledger_to_json(const ConstantsLedger& l) {
  return {{"k", l.k},
          {"chi", l.chi},
          {"delta", l.delta},
          {"alpha", l.alpha},
          {"theta", l.theta},
          {"delta0", l.delta0},
          {"c1", l.c1},
          {"c2", l.c2},
          {"c3", l.c3},
          {"c5", l.c5},
          {"c_B", l.c_B},
          {"c_leftover", l.c_leftover},
          {"distortion_constant", l.distortion_constant},
          {"squash_height_constant", l.squash_height_constant},
          {"max_depth", l.max_depth},
          {"projection_kind", l.projection_kind}};
}

json label_to_json(const BallLabel& label) {
  json w = json::array();
  for (const Vec& z : label.witnesses) w.push_back(vec_json(z));
  json out = {{"center", vec_json(label.center)},
              {"radius", label.radius},
              {"kind", to_string(label.kind)},
              {"witnesses", w}};
  out["witness_plane"] = label.witness_plane ? plane_to_json(*label.witness_plane) : json(nullptr);
  return out;
}

json cover_to_json(const CoverResult& r) {
  json stages = json::array();
  for (const StageReport& s : r.stages) {
    stages.push_back({{"stage", s.stage},
                      {"radius", s.radius},
                      {"originals", s.originals},
                      {"good", s.good},
                      {"bad", s.bad},
                      {"dropped_bad", s.dropped_bad},
                      {"net", s.net},
                      {"excess_mass", s.excess_mass},
                      {"chebyshev_rhs", s.chebyshev_rhs},
                      {"overlap", s.overlap},
                      {"beta_shift", s.beta_shift},
                      {"max_movement", s.max_movement},
                      {"disjoint_violations", s.disjoint_violations},
                      {"radius_violations", s.radius_violations}});
  }
  json tau = json::array();
  for (const SigmaMap& s : r.tau_stages) {
    json planes = json::array();
    for (const AffinePlane& p : s.planes) planes.push_back(plane_to_json(p));
    tau.push_back({{"radius", s.r}, {"centers", s.centers.size()}, {"overlap", s.pou.overlap()}, {"planes", planes}});
  }
  json checks = {{"disjoint_ok", r.disjoint_ok},         {"radius_ok", r.radius_ok},
                 {"packing_ok", r.packing_ok},           {"leftover_ok", r.leftover_ok},
                 {"distortion_ok", r.distortion_ok},     {"valid", r.valid},
                 {"estimate_violated", r.estimate_violated}};
  json out = {{"top_ball_bad", r.top_ball_bad},
              {"t0", plane_to_json(r.t0)},
              {"kept_originals", balls_json(r.kept_originals)},
              {"bad_balls", balls_json(r.bad_balls)},
              {"final_good", balls_json(r.final_good)},
              {"stages", stages},
              {"tau_stages", tau},
              {"leftover_mass", r.leftover_mass},
              {"leftover_bound", r.leftover_bound},
              {"excess_mass", r.excess_mass},
              {"packing_sum", r.packing_sum},
              {"packing_all", r.packing_all},
              {"distortion", r.distortion},
              {"distortion_bound", r.distortion_bound},
              {"measured_delta", r.measured_delta},
              {"dini_violators", r.dini_violators},
              {"checks", checks},
              {"diagnostics", r.diagnostics},
              {"ledger", ledger_to_json(r.ledger)}};
  out["top_witness_plane"] = r.top_witness_plane ? plane_to_json(*r.top_witness_plane) : json(nullptr);
  return out;
}

json packing_to_json(const PackingResult& r) {
  json levels = json::array();
  for (const LevelReport& l : r.levels) {
    levels.push_back({{"level", l.level},
                      {"bad_balls", l.bad_balls},
                      {"leftover", l.leftover},
                      {"leftover_bound", l.leftover_bound},
                      {"packing_originals", l.packing_originals},
                      {"packing_originals_bound", l.packing_originals_bound},
                      {"packing_bad", l.packing_bad},
                      {"packing_bad_bound", l.packing_bad_bound},
                      {"max_net", l.max_net},
                      {"net_bound", l.net_bound},
                      {"ok", l.ok}});
  }
  return {{"kept", balls_json(r.kept)},
          {"unresolved_bad", balls_json(r.unresolved_bad)},
          {"unresolved_good", balls_json(r.unresolved_good)},
          {"levels", levels},
          {"M", r.M},
          {"scale_factor", r.scale_factor},
          {"packing_sum", r.packing_sum},
          {"leftover_mass", r.leftover_mass},
          {"dini_violators", r.dini_violators},
          {"chi_constraint_ok", r.chi_constraint_ok},
          {"terminated", r.terminated},
          {"ledger_ok", r.ledger_ok},
          {"ledger", ledger_to_json(r.ledger)}};
}

json snowflake_to_json(const SnowflakeSpec& spec) {
  json out = {{"mode", to_string(spec.mode)},
              {"p", spec.p.str()},
              {"depth", spec.depth},
              {"etas", std::vector<double>(spec.etas.begin(), spec.etas.begin() + (spec.depth - 1))},
              {"hypothesis_ok", snowflake_hypothesis_ok(spec)},
              {"lengths", snowflake_lengths(spec)}};
  if (spec.depth <= kMaxMaterializedDepth) {
    Polyline poly = snowflake(spec);
    json verts = json::array();
    for (const Vec& v : poly.vertices) verts.push_back(vec_json(v));
    out["params"] = poly.params;
    out["vertices"] = verts;
    out["speeds"] = segment_speeds(poly);
  } else {
    out["vertices"] = nullptr;
    out["speeds"] = nullptr;
  }
  return out;
}

std::string dini_csv(const DiniProfile& prof) {
  std::ostringstream os;
  os << "scale,beta,beta_alpha,cumulative\n";
  char buf[160];
  for (std::size_t j = 0; j < prof.scales.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n", prof.scales[j], prof.betas[j],
                  std::pow(prof.betas[j], prof.alpha), prof.cumulative[j]);
    os << buf;
  }
  return os.str();
}

}  // namespace reif
