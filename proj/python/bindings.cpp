#include "reif/cli.hpp"
#include "reif/report.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace reif;

namespace {

Exponent exponent_of(const py::object& p) {
  if (py::isinstance<py::str>(p)) return Exponent::parse(p.cast<std::string>());
  return Exponent::from_double(p.cast<double>());
}

PointMeasure measure_of(const Mat& points, const std::optional<Vec>& weights) {
  PointMeasure mu(static_cast<int>(points.cols()));
  if (weights && weights->size() != points.rows()) throw std::invalid_argument("weights and points differ in length");
  for (Eigen::Index i = 0; i < points.rows(); ++i) mu.add(points.row(i).transpose(), weights ? (*weights)[i] : 1.0);
  return mu;
}

std::vector<std::size_t> all_atoms(const PointMeasure& mu) {
  std::vector<std::size_t> S(mu.size());
  for (std::size_t i = 0; i < S.size(); ++i) S[i] = i;
  return S;
}

std::vector<double> radii_of(const std::optional<std::vector<double>>& r_s, std::size_t n) {
  if (!r_s) return std::vector<double>(n, 0.0);
  if (r_s->size() != n) throw std::invalid_argument("r_s and points differ in length");
  return *r_s;
}

CoverConfig config_of(double chi, double delta, int max_depth) {
  CoverConfig cfg;
  cfg.chi = chi;
  cfg.delta = delta;
  cfg.max_depth = max_depth;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Beta numbers and Reifenberg-type covers for point measures in l^p spaces.";

  py::class_<NormedSpace>(m, "NormedSpace")
      .def(py::init([](int dim, const py::object& p) { return NormedSpace(dim, exponent_of(p)); }), py::arg("dim"),
           py::arg("p") = 2.0)
      .def_property_readonly("dim", &NormedSpace::dim)
      .def_property_readonly("p", [](const NormedSpace& s) { return s.p().str(); })
      .def_property_readonly("hilbert", &NormedSpace::hilbert)
      .def("norm", &NormedSpace::norm)
      .def("dist", &NormedSpace::dist)
      .def("dual_norm", &NormedSpace::dual_norm)
      .def("__repr__", &NormedSpace::describe);

  m.def("duality_map", [](const NormedSpace& s, const Vec& x) { return duality_map(s, x).coefficients; });
  m.def("modulus_smoothness_bound", &modulus_smoothness_bound);
  m.def("modulus_smoothness_empirical", &modulus_smoothness_empirical, py::arg("space"), py::arg("t"),
        py::arg("samples") = 10000, py::arg("seed") = 0);
  m.def("smoothness_power", &smoothness_power);

  // points is an (n, dim) array, one atom per row.
  m.def(
      "beta",
      [](const NormedSpace& s, const Mat& points, const Vec& x, double r, int k, std::optional<Vec> weights) {
        return beta(s, measure_of(points, weights), x, r, k);
      },
      py::arg("space"), py::arg("points"), py::arg("x"), py::arg("r"), py::arg("k"), py::arg("weights") = py::none());

  m.def(
      "best_plane",
      [](const NormedSpace& s, const Mat& points, const Vec& x, double r, int k, std::optional<Vec> weights) {
        BetaResult b = best_plane(s, measure_of(points, weights), x, r, k);
        py::dict d;
        d["beta"] = b.beta;
        d["objective"] = b.objective;
        d["base"] = b.plane.base;
        d["basis"] = b.plane.basis;
        d["valid"] = b.valid;
        d["empty"] = b.empty;
        return d;
      },
      py::arg("space"), py::arg("points"), py::arg("x"), py::arg("r"), py::arg("k"), py::arg("weights") = py::none());

  m.def(
      "dini_profile",
      [](const NormedSpace& s, const Mat& points, const Vec& x, double r_lo, double r_hi, int k, double alpha,
         double chi, std::optional<Vec> weights) {
        DiniProfile prof = dini_profile(s, measure_of(points, weights), x, r_lo, r_hi, k, alpha, chi);
        py::dict d;
        d["scales"] = prof.scales;
        d["betas"] = prof.betas;
        d["cumulative"] = prof.cumulative;
        d["dini_sum"] = prof.dini_sum;
        return d;
      },
      py::arg("space"), py::arg("points"), py::arg("x"), py::arg("r_lo"), py::arg("r_hi"), py::arg("k"),
      py::arg("alpha"), py::arg("chi") = 0.5, py::arg("weights") = py::none());

  // Cover and packing results come back as the same JSON text the CLI prints.
  m.def(
      "cover_json",
      [](const NormedSpace& s, const Mat& points, int k, std::optional<Vec> weights,
         std::optional<std::vector<double>> r_s, double chi, double delta, int max_depth) {
        PointMeasure mu = measure_of(points, weights);
        return dump_json(cover_to_json(
            covering_lemma(s, mu, all_atoms(mu), radii_of(r_s, mu.size()), k, config_of(chi, delta, max_depth))));
      },
      py::arg("space"), py::arg("points"), py::arg("k"), py::arg("weights") = py::none(), py::arg("r_s") = py::none(),
      py::arg("chi") = 0.1, py::arg("delta") = 0.1, py::arg("max_depth") = 4);

  m.def(
      "pack_json",
      [](const NormedSpace& s, const Mat& points, int k, double M, std::optional<Vec> weights,
         std::optional<std::vector<double>> r_s, double chi, double delta, int max_depth, int max_levels) {
        PointMeasure mu = measure_of(points, weights);
        return dump_json(packing_to_json(main_packing(s, mu, all_atoms(mu), radii_of(r_s, mu.size()), k, M,
                                                      config_of(chi, delta, max_depth), max_levels)));
      },
      py::arg("space"), py::arg("points"), py::arg("k"), py::arg("M") = -1.0, py::arg("weights") = py::none(),
      py::arg("r_s") = py::none(), py::arg("chi") = 0.1, py::arg("delta") = 0.1, py::arg("max_depth") = 4,
      py::arg("max_levels") = 12);

  m.def(
      "snowflake_lengths",
      [](const std::vector<double>& etas, int depth, const py::object& p, const std::string& mode) {
        SnowflakeSpec spec;
        spec.mode = snowflake_mode_from_string(mode);
        spec.p = exponent_of(p);
        spec.etas = etas;
        spec.depth = depth;
        return snowflake_lengths(spec);
      },
      py::arg("etas"), py::arg("depth"), py::arg("p") = 2.0, py::arg("mode") = "rademacher");

  m.def("apex_bilipschitz", [](const py::object& p, double eps) { return apex_bilipschitz(exponent_of(p), eps); });

  m.def("no_power_gain_det", []() {
    NoPowerGainMatrix M = no_power_gain_matrix(no_power_gain_points());
    return py::make_tuple(M.det, M.rank);
  });

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
