// Python bindings: numpy arrays in and out, errors mapped to Python exceptions.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "angpn/errors.hpp"
#include "angpn/graphlearn.hpp"
#include "angpn/propagation.hpp"
#include "angpn/runner.hpp"
#include "angpn/simplex.hpp"

namespace py = pybind11;
using angpn::Matrix;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a, const char* name) {
  if (a.ndim() != 2) throw angpn::ShapeError(std::string(name) + " must be a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Matrix& m) {
  Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

Array to_array(const std::vector<double>& v) {
  // Shape given as a vector: pybind11 2.9's count constructor yields a zero stride here.
  Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

// Same resolution the commands use: gamma "auto", "per-row" or a number.
angpn::HyperParams resolved(const angpn::DistanceMatrix& dist, const angpn::HyperParams& h,
                            const std::string& gamma) {
  angpn::RunConfig c;
  c.hyper = h;
  c.gamma = gamma;
  return angpn::resolve_hyper(c, dist);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive neighbor-graph learning and feature propagation";

  // Translators run newest first, so the base class goes in first.
  auto base = py::register_exception<angpn::Error>(m, "AngpnError", PyExc_RuntimeError);
  py::register_exception<angpn::ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<angpn::ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<angpn::DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<angpn::NumericError>(m, "NumericError", base.ptr());
  py::register_exception<angpn::TrainingError>(m, "TrainingError", base.ptr());

  py::class_<angpn::HyperParams>(m, "HyperParams")
      .def(py::init([](double alpha, double beta, double gamma, std::size_t k, std::size_t t_steps,
                       const std::string& graph_mode, const std::string& grad_mode) {
             angpn::HyperParams h;
             h.alpha = alpha;
             h.beta = beta;
             h.gamma = gamma;
             h.k = k;
             h.t_steps = t_steps;
             h.mode.solver = angpn::parse_graph_solver(graph_mode);
             h.grad_mode = angpn::parse_grad_mode(grad_mode);
             h.validate();
             return h;
           }),
           py::arg("alpha") = 0.5, py::arg("beta") = 0.3, py::arg("gamma") = 1.0, py::arg("k") = 10,
           py::arg("t_steps") = 2, py::arg("graph_mode") = "exact-simplex",
           py::arg("grad_mode") = "unrolled")
      .def_readwrite("alpha", &angpn::HyperParams::alpha)
      .def_readwrite("beta", &angpn::HyperParams::beta)
      .def_readwrite("gamma", &angpn::HyperParams::gamma)
      .def_readwrite("k", &angpn::HyperParams::k)
      .def_readwrite("t_steps", &angpn::HyperParams::t_steps)
      .def_property_readonly("mu", &angpn::HyperParams::mu)
      .def_property(
          "graph_mode", [](const angpn::HyperParams& h) { return std::string(to_string(h.mode.solver)); },
          [](angpn::HyperParams& h, const std::string& s) { h.mode.solver = angpn::parse_graph_solver(s); })
      .def_property(
          "grad_mode", [](const angpn::HyperParams& h) { return std::string(to_string(h.grad_mode)); },
          [](angpn::HyperParams& h, const std::string& s) { h.grad_mode = angpn::parse_grad_mode(s); })
      .def("__repr__", [](const angpn::HyperParams& h) {
        return "HyperParams(alpha=" + std::to_string(h.alpha) + ", beta=" + std::to_string(h.beta) +
               ", gamma=" + std::to_string(h.gamma) + ", k=" + std::to_string(h.k) +
               ", t_steps=" + std::to_string(h.t_steps) + ")";
      });

  m.def(
      "simplex_project",
      [](const std::vector<double>& v) {
        const auto p = angpn::simplex_project(v);
        return py::make_tuple(to_array(p.weights), p.threshold);
      },
      py::arg("v"), "Euclidean projection onto the probability simplex: (weights, threshold).");

  m.def(
      "pairwise_euclidean", [](const Array& x) { return to_array(angpn::pairwise_euclidean(to_matrix(x, "x")).d); },
      py::arg("x"));

  m.def(
      "auto_gamma",
      [](const Array& x, std::size_t k) { return angpn::auto_gamma(angpn::pairwise_euclidean(to_matrix(x, "x")), k); },
      py::arg("x"), py::arg("k") = 10);

  m.def(
      "s_step",
      [](const Array& x, const Array& f, const angpn::HyperParams& h, const std::string& gamma) {
        const auto dist = angpn::pairwise_euclidean(to_matrix(x, "x"));
        const auto g = angpn::s_step(dist, to_matrix(f, "f"), resolved(dist, h, gamma));
        return py::make_tuple(to_array(g.s), to_array(g.eta));
      },
      py::arg("x"), py::arg("f"), py::arg("hyper") = angpn::HyperParams{}, py::arg("gamma") = "auto",
      "One adaptive-graph step on features f; distances come from x. Returns (S, eta).");

  m.def(
      "anfp_propagate",
      [](const Array& x, const Array& h, const angpn::HyperParams& p, const std::string& gamma) {
        const auto dist = angpn::pairwise_euclidean(to_matrix(x, "x"));
        const auto out = angpn::anfp_propagate(dist, to_matrix(h, "h"), resolved(dist, p, gamma));
        return py::make_tuple(to_array(out.f), to_array(out.graph.s));
      },
      py::arg("x"), py::arg("h"), py::arg("hyper") = angpn::HyperParams{}, py::arg("gamma") = "auto",
      "T rounds of graph learning and propagation as in one network layer. Returns (F, S).");

  m.def(
      "anfp_exact",
      [](const Array& x, const Array& h, const angpn::HyperParams& p, std::size_t sweeps,
         const std::string& gamma) {
        const auto dist = angpn::pairwise_euclidean(to_matrix(x, "x"));
        const auto out = angpn::anfp_exact(dist, to_matrix(h, "h"), resolved(dist, p, gamma), sweeps);
        return py::make_tuple(to_array(out.f), to_array(out.graph.s), out.trace);
      },
      py::arg("x"), py::arg("h"), py::arg("hyper") = angpn::HyperParams{}, py::arg("sweeps") = 10,
      py::arg("gamma") = "auto", "Exact alternation. Returns (F, S, objective trace).");

  m.def(
      "nfp_iterate",
      [](const Array& a, const Array& h, double alpha, std::size_t steps) {
        return to_array(angpn::nfp_iterate(to_matrix(a, "a"), to_matrix(h, "h"), alpha, steps));
      },
      py::arg("a"), py::arg("h"), py::arg("alpha"), py::arg("steps"));

  m.def(
      "nfp_closed_form",
      [](const Array& a, const Array& h, double alpha) {
        return to_array(angpn::nfp_closed_form(to_matrix(a, "a"), to_matrix(h, "h"), alpha));
      },
      py::arg("a"), py::arg("h"), py::arg("alpha"));

  // Config-level entry points take the same JSON the command-line tool writes.
  m.def(
      "load_dataset",
      [](const std::string& config, std::uint64_t seed) {
        const auto cfg = angpn::config_from_json(config);
        const auto ds = angpn::load_run_dataset(cfg, seed);
        return py::make_tuple(to_array(angpn::transform_features(ds.features, cfg.transform)), ds.labels);
      },
      py::arg("config"), py::arg("seed") = 0);

  m.def(
      "run_once",
      [](const std::string& config, std::uint64_t seed) {
        const auto cfg = angpn::config_from_json(config);
        angpn::RunOutcome r;
        {
          py::gil_scoped_release release;
          r = angpn::run_once(cfg, seed);
        }
        return py::make_tuple(angpn::metrics_to_json(r.metrics), to_array(r.probabilities));
      },
      py::arg("config"), py::arg("seed") = 0);

  m.def(
      "default_config", [] { return angpn::config_to_json(angpn::RunConfig{}); },
      "Defaults as JSON, in the layout config files use.");

  m.def(
      "format_cell", &angpn::format_cell, py::arg("mean"), py::arg("std"));
}
