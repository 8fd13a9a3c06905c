#include "soliton/density_matrix.hpp"
#include "soliton/errors.hpp"
#include "soliton/oracle.hpp"
#include "soliton/spectral.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace soliton;

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Density matrix and condensate fraction of quantum bright solitons";
    m.attr("__version__") = SOLITON_VERSION;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
    py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<InternalError>(m, "InternalError", base.ptr());

    m.def("set_warning_sink", [](std::optional<WarningSink> sink) { set_warning_sink(sink ? *sink : nullptr); },
          py::arg("sink"), "Route warnings to a callable, or back to stderr with None.");
    py::module_::import("atexit").attr("register")(py::cpp_function([] { set_warning_sink(nullptr); }));

    py::enum_<MomentumLattice>(m, "MomentumLattice")
        .value("Total", MomentumLattice::Total)
        .value("String", MomentumLattice::String);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init<>())
        .def(py::init([](int particles, double half_length, double coupling, double delta, int strings,
                         int center_index, double grid_spacing, MomentumLattice lattice) {
                 ModelParams p;
                 p.particles = particles;
                 p.half_length = half_length;
                 p.coupling = coupling;
                 p.delta = delta;
                 p.strings = strings;
                 p.center_index = center_index;
                 p.grid_spacing = grid_spacing;
                 p.lattice = lattice;
                 return p;
             }),
             py::kw_only(), py::arg("particles") = 6, py::arg("half_length") = 25.0, py::arg("coupling") = -0.5,
             py::arg("delta") = 0.05, py::arg("strings") = 0, py::arg("center_index") = 0,
             py::arg("grid_spacing") = 0.3, py::arg("lattice") = MomentumLattice::Total)
        .def_readwrite("particles", &ModelParams::particles)
        .def_readwrite("half_length", &ModelParams::half_length)
        .def_readwrite("coupling", &ModelParams::coupling)
        .def_readwrite("delta", &ModelParams::delta)
        .def_readwrite("strings", &ModelParams::strings)
        .def_readwrite("center_index", &ModelParams::center_index)
        .def_readwrite("grid_spacing", &ModelParams::grid_spacing)
        .def_readwrite("lattice", &ModelParams::lattice)
        .def("validate", &ModelParams::validate)
        .def("grid", &ModelParams::grid)
        .def("momentum", &ModelParams::momentum)
        .def("__repr__", [](const ModelParams& p) {
            return "ModelParams(particles=" + std::to_string(p.particles) + ", half_length="
                   + std::to_string(p.half_length) + ", coupling=" + std::to_string(p.coupling)
                   + ", delta=" + std::to_string(p.delta) + ", strings=" + std::to_string(p.strings) + ")";
        });

    m.def("string_norm", &string_norm, py::arg("particles"), py::arg("half_length"), py::arg("coupling"));
    m.def("gaussian_weight", &gaussian_weight, py::arg("n"), py::arg("params"));

    py::class_<DensityMatrix>(m, "DensityMatrix")
        .def_readonly("grid", &DensityMatrix::grid)
        .def_readonly("values", &DensityMatrix::values)
        .def_readonly("params", &DensityMatrix::params)
        .def_readonly("trace_estimate", &DensityMatrix::trace_estimate)
        .def_property_readonly("size", &DensityMatrix::size);

    py::enum_<AssemblyStrategy>(m, "AssemblyStrategy")
        .value("Pairwise", AssemblyStrategy::Pairwise)
        .value("DifferenceCached", AssemblyStrategy::DifferenceCached);

    m.def(
        "assemble",
        [](const ModelParams& p, AssemblyStrategy strategy, int threads) {
            AssemblyOptions opt;
            opt.strategy = strategy;
            opt.threads = threads;
            py::gil_scoped_release release;
            return assemble(p, opt);
        },
        py::arg("params"), py::arg("strategy") = AssemblyStrategy::DifferenceCached, py::arg("threads") = 1);
    m.def("density_profile", &density_profile, py::arg("dm"));
    m.def("save", &save, py::arg("dm"), py::arg("path"));
    m.def("load", &load, py::arg("path"));
    m.def("write_profile_csv", &write_profile_csv, py::arg("dm"), py::arg("path"));
    m.def("write_carpet_csv", &write_carpet_csv, py::arg("dm"), py::arg("path"));

    py::class_<SpectrumReport>(m, "SpectrumReport")
        .def_readonly("eigenvalues", &SpectrumReport::eigenvalues)
        .def_readonly("orbitals", &SpectrumReport::orbitals)
        .def_readonly("condensate_fraction", &SpectrumReport::condensate_fraction)
        .def_readonly("variance", &SpectrumReport::variance)
        .def_readonly("params", &SpectrumReport::params);

    m.def("eigendecompose", &eigendecompose, py::arg("dm"), py::arg("with_orbitals") = true,
          py::call_guard<py::gil_scoped_release>());
    m.def("spatial_variance", py::overload_cast<const DensityMatrix&>(&spatial_variance), py::arg("dm"));
    m.def("hf_variance", &hf_variance, py::arg("particles"), py::arg("coupling"));

    py::class_<ScanPoint>(m, "ScanPoint")
        .def_readonly("axis", &ScanPoint::axis)
        .def_readonly("condensate_fraction", &ScanPoint::condensate_fraction)
        .def_readonly("variance", &ScanPoint::variance)
        .def_readonly("leading", &ScanPoint::leading)
        .def_readonly("delta", &ScanPoint::delta)
        .def_readonly("strings", &ScanPoint::strings)
        .def_readonly("particles", &ScanPoint::particles);

    py::class_<ScanResult>(m, "ScanResult")
        .def_readonly("axis_name", &ScanResult::axis_name)
        .def_readonly("points", &ScanResult::points)
        .def_readonly("best", &ScanResult::best)
        .def_readonly("undersampled", &ScanResult::undersampled)
        .def("best_point", &ScanResult::best_point);

    m.def("scan_delta", &scan_delta, py::arg("params"), py::arg("deltas"), py::arg("threads") = 1,
          py::call_guard<py::gil_scoped_release>());
    m.def("scan_strings", &scan_strings, py::arg("params"), py::arg("strings"), py::arg("threads") = 1,
          py::call_guard<py::gil_scoped_release>());

    py::class_<DeltaSearch> search(m, "DeltaSearch");
    py::enum_<DeltaSearch::Objective>(search, "Objective")
        .value("MaxCondensate", DeltaSearch::Objective::MaxCondensate)
        .value("MinVariance", DeltaSearch::Objective::MinVariance);
    search.def(py::init<>())
        .def_readwrite("objective", &DeltaSearch::objective)
        .def_readwrite("delta_min", &DeltaSearch::delta_min)
        .def_readwrite("delta_max", &DeltaSearch::delta_max)
        .def_readwrite("coarse_points", &DeltaSearch::coarse_points)
        .def_readwrite("refine_steps", &DeltaSearch::refine_steps)
        .def_readwrite("max_strings", &DeltaSearch::max_strings)
        .def_readwrite("window_sigmas", &DeltaSearch::window_sigmas)
        .def_readwrite("trace_tolerance", &DeltaSearch::trace_tolerance);

    m.def("optimize_delta", &optimize_delta, py::arg("params"), py::arg("search") = DeltaSearch{},
          py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>());
    m.def("scan_particles", &scan_particles, py::arg("params"), py::arg("particles"),
          py::arg("search") = DeltaSearch{}, py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>());

    py::class_<SaturationFit>(m, "SaturationFit")
        .def_readonly("offset", &SaturationFit::offset)
        .def_readonly("amplitude", &SaturationFit::amplitude)
        .def_readonly("time_scale", &SaturationFit::time_scale)
        .def_readonly("saturation", &SaturationFit::saturation)
        .def_readonly("residual_norm", &SaturationFit::residual_norm)
        .def_readonly("residuals", &SaturationFit::residuals)
        .def_readonly("converged", &SaturationFit::converged)
        .def_readonly("diagnostics", &SaturationFit::diagnostics)
        .def("to_json", [](const SaturationFit& f) { return to_json(f); });
    m.def("saturation_fit", py::overload_cast<const std::vector<double>&, const std::vector<double>&>(&saturation_fit),
          py::arg("x"), py::arg("y"));
    m.def("saturation_fit", py::overload_cast<const ScanResult&>(&saturation_fit), py::arg("scan"));

    py::class_<PowerLawFit>(m, "PowerLawFit")
        .def_readonly("a", &PowerLawFit::a)
        .def_readonly("beta", &PowerLawFit::beta)
        .def_readonly("used", &PowerLawFit::used)
        .def_readonly("excluded", &PowerLawFit::excluded)
        .def_readonly("residuals", &PowerLawFit::residuals)
        .def_readonly("residual_norm", &PowerLawFit::residual_norm)
        .def_readonly("beta_error", &PowerLawFit::beta_error)
        .def("to_json", [](const PowerLawFit& f) { return to_json(f); });
    m.def("powerlaw_fit", &powerlaw_fit, py::arg("particles"), py::arg("fractions"));

    py::class_<QuadratureSpec>(m, "QuadratureSpec")
        .def(py::init<>())
        .def_readwrite("abs_tol", &QuadratureSpec::abs_tol)
        .def_readwrite("rel_tol", &QuadratureSpec::rel_tol)
        .def_readwrite("max_evals", &QuadratureSpec::max_evals);
    py::class_<QuadratureResult>(m, "QuadratureResult")
        .def_readonly("value", &QuadratureResult::value)
        .def_readonly("error", &QuadratureResult::error)
        .def_readonly("evaluations", &QuadratureResult::evaluations)
        .def_readonly("trusted", &QuadratureResult::trusted);
    m.def("quadrature_form_factor", &quadrature_form_factor, py::arg("np"), py::arg("n"), py::arg("xp"),
          py::arg("x"), py::arg("params"), py::arg("spec") = QuadratureSpec{},
          py::call_guard<py::gil_scoped_release>());
    m.def("quadrature_norm", &quadrature_norm, py::arg("particles"), py::arg("half_length"), py::arg("coupling"),
          py::arg("grid_spacing"), py::arg("spec") = QuadratureSpec{});

    py::class_<ValidationRow>(m, "ValidationRow")
        .def_readonly("name", &ValidationRow::name)
        .def_readonly("analytic", &ValidationRow::analytic)
        .def_readonly("oracle", &ValidationRow::oracle)
        .def_readonly("difference", &ValidationRow::difference)
        .def_readonly("tolerance", &ValidationRow::tolerance)
        .def_readonly("passed", &ValidationRow::pass);
    py::class_<ValidationOptions>(m, "ValidationOptions")
        .def(py::init<>())
        .def_readwrite("particle_counts", &ValidationOptions::particle_counts)
        .def_readwrite("draws", &ValidationOptions::draws)
        .def_readwrite("half_length", &ValidationOptions::half_length)
        .def_readwrite("coupling", &ValidationOptions::coupling)
        .def_readwrite("grid_spacing", &ValidationOptions::grid_spacing)
        .def_readwrite("max_index", &ValidationOptions::max_index)
        .def_readwrite("seed", &ValidationOptions::seed)
        .def_readwrite("tolerance", &ValidationOptions::tolerance)
        .def_readwrite("quadrature", &ValidationOptions::quadrature);
    m.def("run_validation", &run_validation, py::arg("options") = ValidationOptions{},
          py::call_guard<py::gil_scoped_release>());
    m.def("format_validation_report", &format_validation_report, py::arg("rows"));
}
