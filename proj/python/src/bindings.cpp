#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cgpdf/app/commands.hpp"
#include "cgpdf/app/config.hpp"
#include "cgpdf/cg_filter.hpp"
#include "cgpdf/density.hpp"
#include "cgpdf/diagnostics.hpp"
#include "cgpdf/triad.hpp"

namespace py = pybind11;
using namespace cgpdf;

namespace {

SimConfig sim_config(double t_end, double dt, Index stride, double cap) {
  SimConfig c;
  c.t_end = t_end;
  c.dt = dt;
  c.store_stride = stride;
  c.blowup_cap = cap;
  return c;
}

// Joint snapshots as an array (records, dim, L) in [u_I; u_II] order.
py::array_t<double> stack(const TrajectoryStore& s) {
  const Index R = s.n_records(), L = s.n_samples();
  const Index nI = s.record(0).uI.rows(), nII = s.record(0).uII.rows();
  py::array_t<double> out({R, nI + nII, L});
  auto a = out.mutable_unchecked<3>();
  for (Index k = 0; k < R; ++k)
    for (Index i = 0; i < L; ++i) {
      for (Index j = 0; j < nI; ++j) a(k, j, i) = s.record(k).uI(j, i);
      for (Index j = 0; j < nII; ++j) a(k, nI + j, i) = s.record(k).uII(j, i);
    }
  return out;
}

}  // namespace

PYBIND11_MODULE(_cgpdf, m) {
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<TriadParams>(m, "TriadParams")
      .def(py::init<>())
      .def_readwrite("A1", &TriadParams::A1)
      .def_readwrite("A2", &TriadParams::A2)
      .def_readwrite("A3", &TriadParams::A3)
      .def_readwrite("d1", &TriadParams::d1)
      .def_readwrite("d2", &TriadParams::d2)
      .def_readwrite("d3", &TriadParams::d3)
      .def_readwrite("sigma2", &TriadParams::sigma2)
      .def_readwrite("sigma3", &TriadParams::sigma3)
      .def_readwrite("epsilon", &TriadParams::epsilon)
      .def("validate", &TriadParams::validate)
      .def("__repr__", [](const TriadParams& p) {
        return "TriadParams(A=(" + std::to_string(p.A1) + ", " + std::to_string(p.A2) +
               ", " + std::to_string(p.A3) + "), eps=" + std::to_string(p.epsilon) + ")";
      });

  m.def("triad_preset", [](const std::string& preset, const std::string& regime) {
    return triad_preset(preset, regime);
  }, py::arg("preset"), py::arg("regime") = "");

  m.def("invariant_covariance", [](const TriadParams& p) -> py::object {
    const auto g = triad_invariant_measure(p);
    if (!g) return py::none();
    return py::cast(Mat(g->covariance));
  }, "Covariance of the Gaussian invariant measure in (u1, u2, u3) order, or None.");

  m.def("simulate", [](const TriadParams& p, Index L, double t_end, double dt,
                       Index stride, std::uint64_t seed, double cap) {
    const auto model = triad_model(p);
    py::gil_scoped_release nogil;
    auto r = simulate(model, Ensemble::at_point(Vec::Zero(2), Vec::Zero(1), L),
                      sim_config(t_end, dt, stride, cap), RngPolicy{seed});
    py::gil_scoped_acquire gil;
    return py::make_tuple(py::cast(r.store.times()), stack(r.store));
  }, py::arg("params"), py::arg("L"), py::arg("t_end"), py::arg("dt") = 1e-3,
     py::arg("stride") = 1, py::arg("seed") = 1, py::arg("blowup_cap") = 1e8,
     "Triad paths from the origin: (times, states[record, (u2, u3, u1), sample]).");

  m.def("simulate_filtered", [](const TriadParams& p, Index L, double t_end,
                                double dt, Index stride, std::uint64_t seed) {
    const auto model = triad_model(p);
    py::gil_scoped_release nogil;
    auto r = simulate_filtered(model, Ensemble::at_point(Vec::Zero(2), Vec::Zero(1), L),
                               FilterInit::from_ensemble(),
                               sim_config(t_end, dt, stride, 1e8), RngPolicy{seed});
    py::gil_scoped_acquire gil;
    const Index last = r.filter.n_records() - 1;
    py::dict d;
    d["times"] = r.store.times();
    d["states"] = stack(r.store);
    d["post_mean"] = Mat(r.filter.means(last));
    d["post_var"] = Mat(r.filter.covs(last));
    d["degenerate_count"] = r.filter.degenerate_count();
    return d;
  }, py::arg("params"), py::arg("L"), py::arg("t_end"), py::arg("dt") = 1e-3,
     py::arg("stride") = 1, py::arg("seed") = 1,
     "Lockstep simulation and filtering; posterior moments at the final time.");

  m.def("hybrid_density", [](const Mat& uI, const Mat& means, const Mat& vars,
                             const Mat& points, double kappa, double delta) {
    if (vars.rows() != 1) throw ConfigError("hybrid_density supports one hidden coordinate");
    std::vector<Mat> covs;
    for (Index i = 0; i < vars.cols(); ++i) covs.push_back(Mat::Constant(1, 1, vars(0, i)));
    const Bandwidth bw = scaling_bandwidth(uI.cols(), uI.rows(), sample_std(uI), kappa);
    return Vec(build_hybrid(uI, means, covs, bw, delta).evaluate(points));
  }, py::arg("uI"), py::arg("post_mean"), py::arg("post_var"), py::arg("points"),
     py::arg("kappa") = 1.0, py::arg("delta") = 1e-6,
     "Hybrid density at points (rows ordered [u_I; u_II]).");

  m.def("gaussian_l2_norm", &gaussian_l2_norm);
  m.def("scaling_bandwidth_H", [](Index L, Index n_dims, double kappa) {
    return scaling_bandwidth(L, n_dims, Vec::Ones(n_dims), kappa).H;
  }, py::arg("L"), py::arg("n_dims"), py::arg("kappa") = 1.0);

  m.def("structural_constants", [](const TriadParams& p) {
    const auto c = structural_constants(triad_energy_form(p));
    py::dict d;
    d["lambda_minus"] = c.lambda_minus;
    d["lambda_plus"] = c.lambda_plus;
    d["lambda_B"] = c.lambda_B;
    d["rho"] = c.rho;
    d["De"] = c.De;
    d["Dc"] = c.Dc;
    d["applicable"] = c.applicable;
    d["note"] = c.note;
    return d;
  });

  m.def("run", [](const std::string& command, const std::string& config_json,
                  const std::vector<std::string>& sets, bool check) {
    auto cfg = app::merge_config(app::json::parse(config_json.empty() ? "{}" : config_json));
    for (const auto& s : sets) app::apply_override(cfg, s);
    const auto rc = app::parse_config(cfg);
    py::gil_scoped_release nogil;
    return app::run_command(command, rc, check);
  }, py::arg("command"), py::arg("config_json") = "", py::arg("sets") = std::vector<std::string>{},
     py::arg("check") = false,
     "Runs a CLI command in-process; returns the CLI exit code (0 or 4).");
}
