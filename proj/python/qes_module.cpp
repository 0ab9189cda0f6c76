#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <sstream>

#include "qes/analysis.hpp"
#include "qes/errors.hpp"
#include "qes/frobenius.hpp"
#include "qes/spectrum.hpp"

namespace py = pybind11;
using namespace qes;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> a(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

SolverConfig make_config(const py::kwargs& kw) {
  SolverConfig c;
  c.retain_eigenfunctions = false;
  for (const auto& [key, value] : kw) {
    const std::string k = py::str(key);
    if (k == "r_max") c.r_max = value.cast<double>();
    else if (k == "grid_points") c.grid_points = value.cast<int>();
    else if (k == "levels") c.levels = value.cast<int>();
    else if (k == "convergence_tol") c.convergence_tol = value.cast<double>();
    else if (k == "max_grid_points") c.max_grid_points = value.cast<int>();
    else if (k == "tail_tolerance") c.tail_tolerance = value.cast<double>();
    else if (k == "retain_eigenfunctions") c.retain_eigenfunctions = value.cast<bool>();
    else throw InvalidArgument("unknown solver option '" + k + "'");
  }
  return c;
}

py::object fraction(const mpq_class& q) {
  static const py::object Fraction = py::module_::import("fractions").attr("Fraction");
  return Fraction(q.get_str());
}

// Binds fn(obj, r) for a scalar r and elementwise for an array of r.
template <class T, class Fn>
void def_radial(py::class_<T>& cls, const char* name, Fn fn) {
  cls.def(name, [fn](const T& obj, double r) { return fn(obj, r); }, py::arg("r"));
  cls.def(
      name,
      [fn](const T& obj, const py::array_t<double, py::array::c_style | py::array::forcecast>& r) {
        py::array_t<double> out(r.request().shape);
        const double* in = r.data();
        double* o = out.mutable_data();
        for (py::ssize_t k = 0; k < r.size(); ++k) o[k] = fn(obj, in[k]);
        return out;
      },
      py::arg("r"));
}

}  // namespace

PYBIND11_MODULE(_qes, m) {
  m.doc() = "Polynomial (truncated series) and direct numerical solutions of a radial eigenproblem";

  // Translators are tried newest first, so the base class goes in first.
  auto& base = py::register_exception<Error>(m, "QesError", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<RootRefinementFailure>(m, "RootRefinementFailure", base.ptr());
  py::register_exception<IndexOutOfRange>(m, "IndexOutOfRange", base.ptr());
  py::register_exception<NotConverged>(m, "NotConverged", base.ptr());
  py::register_exception<DomainTooSmall>(m, "DomainTooSmall", base.ptr());
  py::register_exception<MonotonicityViolation>(m, "MonotonicityViolation", base.ptr());
  py::register_exception<DegenerateFit>(m, "DegenerateFit", base.ptr());
  py::register_exception<InvalidAlpha>(m, "InvalidAlpha", base.ptr());
  py::register_exception<InvalidMass>(m, "InvalidMass", base.ptr());

  // --- series route -------------------------------------------------------

  m.def(
      "truncation_energy", [](int n, int l, double nu) { return truncation_energy(n, std::abs(l), nu); },
      py::arg("n"), py::arg("l"), py::arg("nu"), "2(n+|l|+1) - nu^2/4");
  m.def(
      "cnp1_coefficients",
      [](int n, int l) {
        const TruncationPolynomial tp = cnp1_polynomial(n, l);
        py::list out;
        for (int k = 0; k <= tp.poly.degree(); ++k) out.append(fraction(tp.poly.coeff(k)));
        return out;
      },
      py::arg("n"), py::arg("l"), "Exact ascending coefficients of c_{n+1}(nu) as Fractions.");
  m.def(
      "truncation_roots", [](int n, int l) { return truncation_roots(n, l).nu; }, py::arg("n"), py::arg("l"),
      "Real roots of c_{n+1}(nu), strictly decreasing.");

  py::class_<TruncationSolution> solution(m, "TruncationSolution");
  solution
      .def_readonly("n", &TruncationSolution::n)
      .def_readonly("i", &TruncationSolution::i)
      .def_readonly("l", &TruncationSolution::l)
      .def_readonly("nu", &TruncationSolution::nu)
      .def_readonly("W", &TruncationSolution::W)
      .def_readonly("coeffs", &TruncationSolution::coeffs)
      .def_readonly("closure_defect", &TruncationSolution::closure_defect)
      .def("__repr__", [](const TruncationSolution& s) {
        std::ostringstream o;
        o << "TruncationSolution(n=" << s.n << ", i=" << s.i << ", l=" << s.l << ", nu=" << s.nu << ", W=" << s.W
          << ")";
        return o.str();
      });
  def_radial(solution, "F", [](const TruncationSolution& s, double r) { return evaluate_F(s, r); });
  def_radial(solution, "relative_residual",
             [](const TruncationSolution& s, double r) { return relative_ode_residual(s, r); });

  m.def("polynomial_solution", py::overload_cast<int, int, int>(&polynomial_solution), py::arg("n"), py::arg("i"),
        py::arg("l"));
  m.def("truncation_point_set", &truncation_point_set, py::arg("n_max"), py::arg("i_max"), py::arg("l"));

  // --- direct solver ------------------------------------------------------

  py::class_<HftResult>(m, "HftResult")
      .def_readonly("dW_numeric", &HftResult::dW_numeric)
      .def_readonly("r_expectation", &HftResult::r_expectation)
      .def_readonly("discrepancy", &HftResult::discrepancy)
      .def_readonly("tolerance", &HftResult::tolerance)
      .def_property_readonly("passed", &HftResult::passed);

  m.def(
      "eigenvalues",
      [](int l, double nu, const py::kwargs& kw) { return solve_spectrum({l, nu}, make_config(kw)).eigenvalues(); },
      py::arg("l"), py::arg("nu"), "Lowest `levels` eigenvalues W_j(nu). Keyword arguments set SolverConfig fields.");
  m.def(
      "eigenfunction",
      [](int l, double nu, int branch, const py::kwargs& kw) {
        SolverConfig c = make_config(kw);
        c.levels = std::max(c.levels, branch + 1);
        c.retain_eigenfunctions = true;
        const Spectrum s = solve_spectrum({l, nu}, c);
        const RadialFunction& f = *s.states.at(static_cast<std::size_t>(branch)).eigenfunction;
        return py::make_tuple(to_array(f.r), to_array(f.F), s.states[static_cast<std::size_t>(branch)].W);
      },
      py::arg("l"), py::arg("nu"), py::arg("branch") = 0, "(r, F, W) on the finest grid, sum F^2 r h = 1.");
  m.def(
      "hft_check",
      [](int l, double nu, int branch, double delta, const py::kwargs& kw) {
        return hft_check({l, nu}, branch, delta, make_config(kw));
      },
      py::arg("l"), py::arg("nu"), py::arg("branch") = 0, py::arg("delta") = 1e-4);
  m.def(
      "curve_scan",
      [](int l, int branches, const std::vector<double>& nu_grid, const py::kwargs& kw) {
        const auto curves = curve_scan(l, branches, nu_grid, make_config(kw));
        py::array_t<double> out({static_cast<py::ssize_t>(branches), static_cast<py::ssize_t>(nu_grid.size())});
        auto w = out.mutable_unchecked<2>();
        for (std::size_t j = 0; j < curves.size(); ++j) {
          for (std::size_t k = 0; k < curves[j].samples.size(); ++k) {
            w(static_cast<py::ssize_t>(j), static_cast<py::ssize_t>(k)) = curves[j].samples[k].W;
          }
        }
        return out;
      },
      py::arg("l"), py::arg("branches"), py::arg("nu_grid"), "Array W[j, k] = W_j(nu_grid[k]).");

  // --- analysis -----------------------------------------------------------

  py::class_<MatchEntry>(m, "MatchEntry")
      .def_readonly("n", &MatchEntry::n)
      .def_readonly("i", &MatchEntry::i)
      .def_readonly("l", &MatchEntry::l)
      .def_readonly("nu", &MatchEntry::nu)
      .def_readonly("W_truncation", &MatchEntry::W_truncation)
      .def_readonly("nearest_branch", &MatchEntry::nearest_branch)
      .def_readonly("W_branch", &MatchEntry::W_branch)
      .def_readonly("distance", &MatchEntry::distance);
  m.def(
      "match_truncation_to_curves",
      [](int n_max, int i_max, int l, double tol) {
        const auto pts = truncation_point_set(n_max, i_max, l);
        const MatchReport r = match_truncation_to_curves(pts, tol);
        py::list out;
        for (const auto& e : r.entries) out.append(py::make_tuple(e, r.passed(e)));
        return out;
      },
      py::arg("n_max"), py::arg("i_max"), py::arg("l"), py::arg("tol") = 1e-6,
      "List of (MatchEntry, passed) for every truncation point.");

  py::class_<FitModel> fit_model(m, "FitModel");
  fit_model
      .def_readonly("branch", &FitModel::branch)
      .def_readonly("l", &FitModel::l)
      .def_readonly("intercept", &FitModel::intercept)
      .def_readonly("b", &FitModel::b)
      .def_readonly("domain_lo", &FitModel::domain_lo)
      .def_readonly("domain_hi", &FitModel::domain_hi)
      .def_readonly("rms_residual", &FitModel::rms_residual)
      .def_readonly("point_count", &FitModel::point_count);
  def_radial(fit_model, "__call__", [](const FitModel& f, double nu) { return f(nu); });
  m.def("fit_branch", &fit_branch, py::arg("l"), py::arg("branch"), py::arg("n_max") = 22);
  m.def("reference_cubic", &reference_cubic, py::arg("l"), py::arg("branch"));
  m.def(
      "fit_deviation",
      [](const FitModel& fit, int samples) {
        const FitDeviation d = compare_fit_to_reference(fit, samples);
        return py::make_tuple(d.max_abs, d.at_nu);
      },
      py::arg("fit"), py::arg("samples") = 100, "(max |fit - reference|, nu at the maximum)");

  m.def(
      "continuity_demonstration",
      [](int l, int branch, double lo, double hi, int samples) {
        const ContinuityTable t = continuity_demonstration(l, branch, lo, hi, samples);
        py::list rows;
        for (const auto& r : t.rows) rows.append(py::make_tuple(r.nu, r.W, r.coincides));
        return rows;
      },
      py::arg("l"), py::arg("branch"), py::arg("nu_lo"), py::arg("nu_hi"), py::arg("samples"),
      "List of (nu, W, coincides_with_truncation_root).");
  m.def(
      "anti_hft_signature",
      [](int n, int l) {
        const AntiHftReport a = anti_hft_signature(n, l);
        py::dict d;
        d["truncation_decreasing"] = a.truncation_decreasing;
        d["branches_increasing"] = a.branches_increasing;
        py::list pts;
        for (const auto& p : a.points) pts.append(py::make_tuple(p.i, p.nu, p.W_truncation, p.W_branches));
        d["points"] = pts;
        return d;
      },
      py::arg("n"), py::arg("l"));

  // --- physical parameters ------------------------------------------------

  py::class_<PhysicalParams>(m, "PhysicalParams")
      .def(py::init([](double mass, double a, double theta, double varpi, int l) {
             return PhysicalParams{mass, a, theta, varpi, l};
           }),
           py::arg("m") = 1.0, py::arg("a") = 0.0, py::arg("theta") = 1.0, py::arg("varpi") = 0.0, py::arg("l") = 0)
      .def_readwrite("m", &PhysicalParams::m)
      .def_readwrite("a", &PhysicalParams::a)
      .def_readwrite("theta", &PhysicalParams::theta)
      .def_readwrite("varpi", &PhysicalParams::varpi)
      .def_readwrite("l", &PhysicalParams::l);
  m.def("alpha", &alpha, py::arg("params"));
  m.def("map_W_to_E", &map_W_to_E, py::arg("W"), py::arg("params"));
  m.def("map_E_to_W", &map_E_to_W, py::arg("E"), py::arg("params"));
  m.def("map_physical_to_nu", &map_physical_to_nu, py::arg("params"));
}
