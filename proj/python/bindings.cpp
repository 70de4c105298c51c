// Python module _gmcf: grids, fields, smoothing primitives, solver and the CLI driver.

#include "gmcf/cli_runner.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace gmcf;

namespace {

py::array_t<double> grid_values(const Grid& g) {
  std::vector<py::ssize_t> shape(g.extents.begin(), g.extents.end());
  py::array_t<double> out(shape);
  std::copy(g.values.begin(), g.values.end(), out.mutable_data());
  return out;
}

Grid grid_from(py::array_t<double, py::array::c_style | py::array::forcecast> values, double spacing,
               const Vec& origin) {
  std::vector<std::uint64_t> ext(values.shape(), values.shape() + values.ndim());
  Grid g(ext, spacing, origin);
  std::copy(values.data(), values.data() + values.size(), g.values.begin());
  return g;
}

}  // namespace

PYBIND11_MODULE(_gmcf, m) {
  m.doc() = "Graphical mean curvature flow toolkit";

  py::register_exception<Error>(m, "GmcfError");

  py::class_<Grid>(m, "Grid")
      .def(py::init(&grid_from), py::arg("values"), py::arg("spacing"), py::arg("origin"))
      .def_readonly("dim", &Grid::dim)
      .def_readonly("extents", &Grid::extents)
      .def_readonly("spacing", &Grid::spacing)
      .def_readonly("origin", &Grid::origin)
      .def_property_readonly("values", &grid_values)
      .def("node", &Grid::node);
  m.def("read_grid", &read_grid_file, py::arg("path"));
  m.def("write_grid", &write_grid_file, py::arg("path"), py::arg("grid"));

  py::class_<DomainSpec>(m, "Domain")
      .def_property_readonly("dim", &DomainSpec::dim)
      .def("describe", &DomainSpec::describe)
      .def("signed_distance", [](const DomainSpec& d, const Vec& x) { return signed_distance(d)(x); })
      .def("principal_curvatures", [](const DomainSpec& d, const Vec& x) {
        return principal_curvatures(signed_distance(d), x);
      });
  m.def("parse_domain", &cli::parse_domain, py::arg("text"));

  m.def("smooth_min_profile", [](double s) { return build_f()(s); }, py::arg("s"));
  m.def("mollified_min", py::overload_cast<double, double, double>(&mollified_min), py::arg("a"), py::arg("b"),
        py::arg("delta"));
  m.def("height_cutoff", &height_cutoff, py::arg("u"), py::arg("big_r"));
  m.def("alteration_feasibility_bound", &alteration_feasibility_bound);
  m.def(
      "boundary_alteration",
      [](double c, double eps_g) {
        const auto g = build_g(c, eps_g);
        return std::make_tuple(g.slope, g.window, g.curvature_dominance);
      },
      py::arg("curvature_dominance"), py::arg("window"));
  m.def(
      "cone_contains",
      [](const std::string& cone, const Vec& kappa) { return CurvatureCone::from_name(cone).contains(kappa); },
      py::arg("cone"), py::arg("kappa"));

  m.def(
      "solve_flow",
      [](const std::string& domain, const std::string& initial, const std::string& boundary, double h, double t_end,
         const std::string& scheme, std::vector<double> outputs) {
        const DomainSpec d = cli::parse_domain(domain);
        const SpaceTimeFn u0 = cli::lookup_expression(initial);
        const SpaceTimeFn bc = cli::lookup_expression(boundary);
        auto [lo, hi] = bounding_box(d);
        lo.array() -= 2 * h;
        hi.array() += 2 * h;
        const auto st = make_state(d, lo, hi, h, [&](const Vec& x) { return u0(x, 0.0); }, bc);
        SolverConfig cfg;
        cfg.h = h;
        cfg.t_end = t_end;
        cfg.scheme = cli::parse_scheme(scheme);
        cfg.output_times = std::move(outputs);
        py::gil_scoped_release release;
        const Trajectory tr = solve(st, cfg);
        return std::make_pair(tr.times, tr.frames);
      },
      py::arg("domain"), py::arg("initial"), py::arg("boundary"), py::arg("h"), py::arg("t_end"),
      py::arg("scheme") = "fd", py::arg("outputs") = std::vector<double>{});

  m.def(
      "run",
      [](const std::string& config_text, const std::string& out_dir, int threads) {
        set_thread_count(threads);
        const cli::RunConfig c = cli::parse_config(config_text);
        py::gil_scoped_release release;
        const cli::RunResult r = cli::run(c, out_dir);
        return std::make_tuple(r.exit_code, r.message, r.outputs);
      },
      py::arg("config_text"), py::arg("out_dir"), py::arg("threads") = 1);
  m.def("documented_keys", &cli::documented_keys);
}
