#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "latfkg/continuum.hpp"
#include "latfkg/convergence.hpp"
#include "latfkg/frac_laplacian.hpp"
#include "latfkg/kg_solver.hpp"
#include "latfkg/lattice.hpp"

namespace py = pybind11;
using namespace latfkg;

namespace {

using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Arrays are (N,)*n in signed index order: element 0 along an axis is j = -N/2.
LatticeSpec spec_of(const py::buffer_info& info, double hbar) {
  if (info.ndim < 1) throw py::value_error("expected an array with at least one axis");
  for (py::ssize_t a = 1; a < info.ndim; ++a) {
    if (info.shape[a] != info.shape[0]) throw py::value_error("array must be (N,)*n");
  }
  return LatticeSpec(static_cast<int>(info.ndim), hbar, static_cast<int>(info.shape[0]));
}

GridFunction to_grid(const ComplexArray& a, double hbar) {
  auto info = a.request();
  const auto spec = spec_of(info, hbar);
  const auto* p = static_cast<const Complex*>(info.ptr);
  return GridFunction(spec, std::vector<Complex>(p, p + spec.size()));
}

std::vector<py::ssize_t> shape_of(const LatticeSpec& spec) {
  return std::vector<py::ssize_t>(spec.dim(), spec.points_per_axis());
}

template <class Field>
ComplexArray to_array(const Field& f) {
  ComplexArray out(shape_of(f.spec()));
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

RealArray to_real_array(std::span<const double> v, std::vector<py::ssize_t> shape) {
  RealArray out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

MassField mass_of(const py::object& mass, const LatticeSpec& spec) {
  if (py::isinstance<py::float_>(mass) || py::isinstance<py::int_>(mass)) {
    return MassField::constant(spec, mass.cast<double>());
  }
  auto arr = mass.cast<RealArray>();
  if (static_cast<std::size_t>(arr.size()) != spec.size()) {
    throw py::value_error("mass array must match the lattice");
  }
  return MassField(spec, std::vector<double>(arr.data(), arr.data() + arr.size()));
}

py::dict solve_py(const ComplexArray& u0, const ComplexArray& u1, double hbar, double alpha,
                  const py::object& mass, double end_time, std::optional<double> dt,
                  int record_every) {
  const auto g0 = to_grid(u0, hbar);
  const auto g1 = to_grid(u1, hbar);
  const auto m = mass_of(mass, g0.spec());
  const FractionalOrder order(alpha);
  SolutionTrace trace = [&] {
    py::gil_scoped_release release;
    return solve(g0, g1, order, m, Forcing::zero(), end_time, dt.value_or(end_time / 1024.0),
                 record_every);
  }();
  const auto& spec = g0.spec();
  auto shape = shape_of(spec);
  shape.insert(shape.begin(), static_cast<py::ssize_t>(trace.states.size()));
  ComplexArray u(shape);
  ComplexArray du(shape);
  std::vector<double> times;
  std::vector<double> energies;
  for (std::size_t i = 0; i < trace.states.size(); ++i) {
    const auto& s = trace.states[i];
    std::copy(s.u.values().begin(), s.u.values().end(), u.mutable_data() + i * spec.size());
    std::copy(s.du.values().begin(), s.du.values().end(), du.mutable_data() + i * spec.size());
    times.push_back(s.time);
    energies.push_back(trace.energies[i].total);
  }
  const auto apriori = apriori_report(trace, g0, g1, m, Forcing::zero());
  py::dict out;
  out["times"] = times;
  out["u"] = u;
  out["du"] = du;
  out["energy"] = energies;
  out["exact_propagator"] = trace.exact_propagator;
  out["apriori_constant"] = apriori.implied_constant;
  return out;
}

py::dict table_py(double alpha, int dim, int radius, std::optional<int> quad_points) {
  const auto table =
      build_table(FractionalOrder(alpha), dim, radius, quad_points.value_or(default_quad_points(dim)));
  const std::vector<py::ssize_t> shape(dim, table.width());
  py::dict out;
  out["weights"] = to_real_array(table.weights(), shape);
  out["errors"] = to_real_array(table.errors(), shape);
  out["quad_error_estimate"] = table.quad_error_estimate();
  out["tail_estimate"] = table.tail_estimate();
  return out;
}

py::dict sweep_py(double alpha, std::vector<double> hbar_list, double box_length, double cutoff,
                  std::vector<double> carrier, double width, double mass, double end_time,
                  bool constant_profile) {
  const int dim = static_cast<int>(std::max<std::size_t>(carrier.size(), 1));
  BandLimitedProfile u0 = constant_profile
                              ? BandLimitedProfile::constant(dim, cutoff, 256, 1.0)
                              : gaussian_profile({.dim = dim,
                                                  .cutoff = cutoff,
                                                  .width = width,
                                                  .carrier = carrier});
  SweepPlan plan{.order = FractionalOrder(alpha),
                 .dim = dim,
                 .mass = mass,
                 .initial_value = u0,
                 .initial_velocity = BandLimitedProfile::zero(dim, cutoff, u0.points()),
                 .end_time = end_time,
                 .hbar_list = std::move(hbar_list),
                 .box_length = box_length};
  ConvergenceReport report = [&] {
    py::gil_scoped_release release;
    return run_sweep(plan);
  }();
  py::list rows;
  for (const auto& r : report.rows) {
    py::dict d;
    d["hbar"] = r.hbar;
    d["N"] = r.points;
    d["D_u"] = r.d_u;
    d["D_du"] = r.d_du;
    d["D_total"] = r.d_total;
    d["D_total_weighted"] = r.d_total_weighted;
    d["normalized"] = r.normalized;
    rows.append(d);
  }
  py::dict out;
  out["rows"] = rows;
  if (report.fit) {
    out["rate"] = report.fit->slope;
    out["residual"] = report.fit->residual;
    out["exact"] = report.fit->exact;
  } else {
    out["rate"] = py::none();
    out["note"] = report.fit_note;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_latfkg, m) {
  m.doc() = "Lattice fractional Klein-Gordon toolkit";

  py::register_exception<SpecMismatchError>(m, "SpecMismatchError", PyExc_ValueError);
  py::register_exception<NyquistError>(m, "NyquistError", PyExc_ValueError);
  py::register_exception<UnsupportedError>(m, "UnsupportedError", PyExc_NotImplementedError);

  m.def("coeff_closed_form", [](double alpha, int j) {
    return coeff_closed_form_1d(FractionalOrder(alpha), j);
  }, py::arg("alpha"), py::arg("j"));

  m.def("coeff_richardson", [](double alpha, std::vector<int> j, std::optional<int> quad_points) {
    const int dim = static_cast<int>(j.size());
    const auto q = coeff_richardson(FractionalOrder(alpha), dim, j,
                                    quad_points.value_or(default_quad_points(dim)));
    return py::make_tuple(q.value, q.error_estimate);
  }, py::arg("alpha"), py::arg("j"), py::arg("quad_points") = py::none());

  m.def("build_table", &table_py, py::arg("alpha"), py::arg("dim"), py::arg("radius"),
        py::arg("quad_points") = py::none());

  m.def("forward_transform", [](const ComplexArray& u, double hbar) {
    return to_array(forward_transform(to_grid(u, hbar)));
  }, py::arg("u"), py::arg("hbar"));

  m.def("inverse_transform", [](const ComplexArray& v, double hbar) {
    auto info = v.request();
    const auto spec = spec_of(info, hbar);
    const auto* p = static_cast<const Complex*>(info.ptr);
    return to_array(inverse_transform(SpectralFunction(spec, {p, p + spec.size()})));
  }, py::arg("v"), py::arg("hbar"));

  m.def("symbol", [](int n, int points, double hbar, double alpha, bool scaled) {
    const LatticeSpec spec(n, hbar, points);
    const SymbolField s(spec, FractionalOrder(alpha), scaled);
    return to_real_array(s.values(), shape_of(spec));
  }, py::arg("n"), py::arg("N"), py::arg("hbar"), py::arg("alpha"), py::arg("scaled") = false);

  m.def("apply_spectral", [](const ComplexArray& u, double hbar, double alpha, double power,
                             bool scaled) {
    return to_array(apply_spectral(to_grid(u, hbar), FractionalOrder(alpha), power, scaled));
  }, py::arg("u"), py::arg("hbar"), py::arg("alpha"), py::arg("power") = 1.0,
        py::arg("scaled") = false);

  m.def("apply_conv", [](const ComplexArray& u, double hbar, double alpha, int radius,
                         std::optional<int> quad_points) {
    const auto g = to_grid(u, hbar);
    const int dim = g.spec().dim();
    const auto table = build_table(FractionalOrder(alpha), dim, radius,
                                   quad_points.value_or(default_quad_points(dim)));
    return to_array(apply_conv(g, table));
  }, py::arg("u"), py::arg("hbar"), py::arg("alpha"), py::arg("radius"),
        py::arg("quad_points") = py::none());

  m.def("energy", [](const ComplexArray& u, const ComplexArray& du, double hbar, double alpha,
                     const py::object& mass) {
    auto g = to_grid(u, hbar);
    auto gd = to_grid(du, hbar);
    const auto mf = mass_of(mass, g.spec());
    const auto e = energy(EvolutionState(0.0, std::move(g), std::move(gd)),
                          FractionalOrder(alpha), mf);
    py::dict out;
    out["kinetic"] = e.kinetic;
    out["dirichlet"] = e.dirichlet;
    out["potential"] = e.potential;
    out["total"] = e.total;
    return out;
  }, py::arg("u"), py::arg("du"), py::arg("hbar"), py::arg("alpha"), py::arg("mass") = 0.0);

  m.def("solve", &solve_py, py::arg("u0"), py::arg("u1"), py::arg("hbar"), py::arg("alpha"),
        py::arg("mass") = 0.0, py::arg("T") = 1.0, py::arg("dt") = py::none(),
        py::arg("record_every") = 16);

  m.def("symbol_gap", [](std::vector<double> theta, double hbar, double alpha) {
    const auto g = symbol_gap(theta, hbar, FractionalOrder(alpha));
    return py::make_tuple(g.gap, g.normalized);
  }, py::arg("theta"), py::arg("hbar"), py::arg("alpha"));

  m.def("fit_rate", [](std::vector<double> hbar, std::vector<double> d) {
    const auto f = fit_rate(hbar, d);
    return py::make_tuple(f.slope, f.residual, f.exact);
  }, py::arg("hbar"), py::arg("discrepancy"));

  m.def("run_sweep", &sweep_py, py::arg("alpha"), py::arg("hbar_list"), py::arg("box_length"),
        py::arg("cutoff"), py::arg("carrier") = std::vector<double>{0.5},
        py::arg("width") = 0.08, py::arg("mass") = 1.0, py::arg("T") = 1.0,
        py::arg("constant_profile") = false);

  m.attr("__version__") = LATFKG_VERSION;
}
