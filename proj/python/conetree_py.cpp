#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "conetree/config.hpp"
#include "conetree/galton_watson.hpp"
#include "conetree/green.hpp"
#include "conetree/io.hpp"
#include "conetree/perturbation.hpp"
#include "conetree/truncation.hpp"
#include "conetree/version.hpp"

namespace py = pybind11;
using namespace conetree;

namespace {

SolverSettings settings_from_kwargs(double tolerance, std::int64_t max_iterations,
                                    double damping, double eta_floor,
                                    std::optional<std::vector<double>> eta_schedule) {
  SolverSettings s;
  s.tolerance = tolerance;
  s.max_iterations = max_iterations;
  s.damping = damping;
  s.eta_floor = eta_floor;
  s.eta_schedule = eta_schedule.has_value() ? *eta_schedule
                                            : default_eta_schedule(eta_floor);
  validate_settings(s);
  return s;
}

}  // namespace

PYBIND11_MODULE(conetree, m) {
  m.doc() = "spectral toolkit for substitution trees";
  m.attr("__version__") = CONETREE_VERSION;

  py::register_exception<MalformedInputError>(m, "MalformedInputError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<NumericalDomainError>(m, "NumericalDomainError",
                                               PyExc_ArithmeticError);
  py::register_exception<ResourceLimitError>(m, "ResourceLimitError", PyExc_RuntimeError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<BatchAbortedError>(m, "BatchAbortedError", PyExc_RuntimeError);
  py::register_exception<ConfigParseError>(m, "ConfigParseError", PyExc_ValueError);

  py::class_<SubstitutionMatrix>(m, "SubstitutionMatrix")
      .def(py::init<std::vector<std::vector<std::int64_t>>, std::vector<std::string>>(),
           py::arg("rows"), py::arg("labels") = std::vector<std::string>{})
      .def_property_readonly("label_count", &SubstitutionMatrix::label_count)
      .def_property_readonly("labels", &SubstitutionMatrix::labels)
      .def("entry", &SubstitutionMatrix::entry, py::arg("l"), py::arg("k"))
      .def("column_sum", &SubstitutionMatrix::column_sum, py::arg("k"))
      .def("label_index", &SubstitutionMatrix::label_index, py::arg("name"))
      .def("is_regular", &SubstitutionMatrix::is_regular);

  py::class_<ValidationReport>(m, "ValidationReport")
      .def_readonly("m0", &ValidationReport::m0)
      .def_readonly("m1", &ValidationReport::m1)
      .def_readonly("m2", &ValidationReport::m2)
      .def_readonly("m1_witness", &ValidationReport::m1_witness)
      .def_readonly("m2_witness", &ValidationReport::m2_witness)
      .def("passed", &ValidationReport::pass);

  m.def("validate_matrix", &validate_matrix, py::arg("matrix"));
  m.def("primitivity_exponent", &primitivity_exponent, py::arg("matrix"));
  m.def("sphere_count", &sphere_count, py::arg("matrix"), py::arg("root_label"),
        py::arg("n"));
  m.def("projected_vertex_count", &projected_vertex_count, py::arg("matrix"),
        py::arg("root_label"), py::arg("depth"));

  py::class_<TruncatedTree>(m, "TruncatedTree")
      .def_property_readonly("size", [](const TruncatedTree& t) { return t.size(); })
      .def_readonly("depth_cap", &TruncatedTree::depth_cap)
      .def_readonly("label", &TruncatedTree::label)
      .def_readonly("parent", &TruncatedTree::parent)
      .def_readonly("depth", &TruncatedTree::depth)
      .def_readonly("child_begin", &TruncatedTree::child_begin)
      .def_readonly("potential", &TruncatedTree::potential)
      .def_readonly("weight", &TruncatedTree::weight)
      .def("census", &TruncatedTree::census, py::arg("n"))
      .def("decorated", &TruncatedTree::decorated);

  m.def("build_tree", &build_tree, py::arg("matrix"), py::arg("root_label"),
        py::arg("depth"), py::arg("vertex_cap") = kDefaultVertexCap);

  m.def("gamma_dist", &gamma_dist, py::arg("g"), py::arg("h"));
  m.def("hyperbolic_distance", &hyperbolic_distance, py::arg("g"), py::arg("h"));
  m.def(
      "phi_step",
      [](Complex z, double v, const std::vector<std::pair<double, Complex>>& children) {
        return phi_step(z, v, children);
      },
      py::arg("z"), py::arg("v"), py::arg("children"));

  py::class_<SolverSettings>(m, "SolverSettings")
      .def(py::init(&settings_from_kwargs), py::arg("tolerance") = 1e-12,
           py::arg("max_iterations") = 100000, py::arg("damping") = 1.0,
           py::arg("eta_floor") = 1e-6,
           py::arg("eta_schedule") = std::optional<std::vector<double>>{})
      .def_readonly("tolerance", &SolverSettings::tolerance)
      .def_readonly("max_iterations", &SolverSettings::max_iterations)
      .def_readonly("damping", &SolverSettings::damping)
      .def_readonly("eta_floor", &SolverSettings::eta_floor)
      .def_readonly("eta_schedule", &SolverSettings::eta_schedule);

  py::class_<GreenVector>(m, "GreenVector")
      .def_readonly("z", &GreenVector::z)
      .def_readonly("values", &GreenVector::values)
      .def_readonly("residual", &GreenVector::residual)
      .def_readonly("iterations", &GreenVector::iterations);

  m.def("solve_green",
        [](const SubstitutionMatrix& mtx, Complex z, const SolverSettings& s,
           std::optional<std::vector<Complex>> warm) {
          return solve_green(mtx, z, s, warm.has_value() ? &*warm : nullptr);
        },
        py::arg("matrix"), py::arg("z"), py::arg("settings") = SolverSettings{},
        py::arg("warm_start") = std::optional<std::vector<Complex>>{});
  m.def("solve_at_energy", &solve_at_energy, py::arg("matrix"), py::arg("energy"),
        py::arg("settings") = SolverSettings{});
  m.def("green_on_grid", &green_on_grid, py::arg("matrix"), py::arg("energies"),
        py::arg("settings") = SolverSettings{}, py::arg("workers") = 1);

  py::class_<Band>(m, "Band")
      .def_readonly("lo", &Band::lo)
      .def_readonly("hi", &Band::hi);

  py::class_<DetectSettings>(m, "DetectSettings")
      .def(py::init<>())
      .def_readwrite("window", &DetectSettings::window)
      .def_readwrite("coarse_step", &DetectSettings::coarse_step)
      .def_readwrite("indicator_threshold", &DetectSettings::indicator_threshold)
      .def_readwrite("endpoint_tol", &DetectSettings::endpoint_tol);

  m.def("default_window", &default_window, py::arg("matrix"));
  m.def("detect_bands", &detect_bands, py::arg("matrix"), py::arg("root_label"),
        py::arg("settings") = SolverSettings{}, py::arg("detect") = DetectSettings{},
        py::arg("workers") = 1);

  py::class_<DosCurve>(m, "DosCurve")
      .def_readonly("energy", &DosCurve::energy)
      .def_readonly("rho", &DosCurve::rho)
      .def_readonly("eta", &DosCurve::eta)
      .def("integral", &DosCurve::integral);

  m.def("dos_curve", &dos_curve, py::arg("matrix"), py::arg("root_label"),
        py::arg("energies"), py::arg("settings") = SolverSettings{},
        py::arg("workers") = 1);

  py::class_<BoundReport>(m, "BoundReport")
      .def_readonly("max_product", &BoundReport::max_product)
      .def_readonly("worst_z", &BoundReport::worst_z)
      .def_readonly("worst_label", &BoundReport::worst_label);

  m.def("verify_green_bound", &verify_green_bound, py::arg("matrix"), py::arg("points"),
        py::arg("settings") = SolverSettings{});

  m.def("exact_forward_green", &exact_forward_green, py::arg("tree"), py::arg("z"));
  m.def("truncated_green", &truncated_green, py::arg("matrix"), py::arg("root_label"),
        py::arg("depth"), py::arg("z"));
  m.def("convergence_study", &convergence_study, py::arg("matrix"),
        py::arg("root_label"), py::arg("z"), py::arg("depths"),
        py::arg("settings") = SolverSettings{});

  py::class_<UniformDist>(m, "UniformDist")
      .def_readonly("lo", &UniformDist::lo)
      .def_readonly("hi", &UniformDist::hi);
  py::class_<DiscreteDist>(m, "DiscreteDist")
      .def_readonly("points", &DiscreteDist::points);

  m.def("uniform_dist", [](double lo, double hi) {
    Distribution d = UniformDist{lo, hi};
    validate_distribution(d);
    return d;
  }, py::arg("lo") = -1.0, py::arg("hi") = 1.0);
  m.def("discrete_dist", [](std::vector<std::pair<double, double>> points) {
    Distribution d = DiscreteDist{std::move(points)};
    validate_distribution(d);
    return d;
  }, py::arg("points"));

  py::class_<PerturbationModel>(m, "PerturbationModel")
      .def(py::init([](double lambda, std::vector<Distribution> potential,
                       std::vector<Distribution> edge) {
             PerturbationModel pm;
             pm.lambda = lambda;
             if (!potential.empty()) pm.potential = std::move(potential);
             if (!edge.empty()) pm.edge = std::move(edge);
             return pm;
           }),
           py::arg("lambda_"), py::arg("potential") = std::vector<Distribution>{},
           py::arg("edge") = std::vector<Distribution>{})
      .def_readonly("lambda_", &PerturbationModel::lambda);

  m.def("sample_decorations", &sample_decorations, py::arg("tree"), py::arg("model"),
        py::arg("seed"), py::arg("sample_index"));
  m.def("perturbed_green", &perturbed_green, py::arg("matrix"), py::arg("root_label"),
        py::arg("depth"), py::arg("model"), py::arg("z"), py::arg("seed"),
        py::arg("sample_index"), py::arg("vertex_cap") = kDefaultVertexCap);

  py::class_<MomentEntry>(m, "MomentEntry")
      .def_readonly("eta", &MomentEntry::eta)
      .def_readonly("energy", &MomentEntry::energy)
      .def_readonly("n", &MomentEntry::n)
      .def_readonly("mean", &MomentEntry::mean)
      .def_readonly("std_error", &MomentEntry::std_error)
      .def_readonly("p", &MomentEntry::p)
      .def_readonly("lambda_", &MomentEntry::lambda)
      .def_readonly("depth", &MomentEntry::depth)
      .def_readonly("seed", &MomentEntry::seed)
      .def_readonly("baseline", &MomentEntry::baseline)
      .def_readonly("im_green", &MomentEntry::im_green);

  py::class_<MomentReport>(m, "MomentReport")
      .def_readonly("entries", &MomentReport::entries)
      .def_readonly("bounded", &MomentReport::bounded)
      .def_readonly("warnings", &MomentReport::warnings);

  m.def("moment_statistic", &moment_statistic, py::arg("matrix"), py::arg("root_label"),
        py::arg("z"), py::arg("model"), py::arg("p"), py::arg("n_samples"),
        py::arg("depth"), py::arg("seed"), py::arg("settings") = SolverSettings{},
        py::arg("workers") = 1, py::arg("vertex_cap") = kDefaultVertexCap);
  m.def("depth_heuristic", &depth_heuristic, py::arg("matrix"), py::arg("root_label"),
        py::arg("eta"), py::arg("vertex_cap") = kDefaultVertexCap);
  m.def("eta_sweep",
        [](const SubstitutionMatrix& mtx, int root_label, double energy,
           const PerturbationModel& pm, double p, const std::vector<double>& etas,
           std::int64_t n_samples, std::uint64_t seed, const SolverSettings& s,
           std::optional<int> fixed_depth, std::optional<BandList> bands,
           double band_margin, std::uint64_t vertex_cap, int workers) {
          return eta_sweep(mtx, root_label, energy, pm, p, etas, n_samples, seed, s,
                           fixed_depth, bands.has_value() ? &*bands : nullptr,
                           band_margin, vertex_cap, workers);
        },
        py::arg("matrix"), py::arg("root_label"), py::arg("energy"), py::arg("model"),
        py::arg("p"), py::arg("etas"), py::arg("n_samples"), py::arg("seed"),
        py::arg("settings") = SolverSettings{},
        py::arg("fixed_depth") = std::optional<int>{},
        py::arg("bands") = std::optional<BandList>{}, py::arg("band_margin") = 0.1,
        py::arg("vertex_cap") = kDefaultVertexCap, py::arg("workers") = 1);

  py::class_<RadialPotential>(m, "RadialPotential")
      .def(py::init([](std::vector<std::vector<double>> values) {
             RadialPotential v;
             v.values = std::move(values);
             return v;
           }),
           py::arg("values"))
      .def_readonly("values", &RadialPotential::values)
      .def("cutoff", &RadialPotential::cutoff);

  m.def("radial_green", &radial_green, py::arg("matrix"), py::arg("root_label"),
        py::arg("potential"), py::arg("lambda_"), py::arg("z"),
        py::arg("settings") = SolverSettings{});
  m.def("radial_sweep", &radial_sweep, py::arg("matrix"), py::arg("root_label"),
        py::arg("potential"), py::arg("lambda_"), py::arg("energy"), py::arg("etas"),
        py::arg("p"), py::arg("settings") = SolverSettings{});

  py::class_<OffspringConfig>(m, "OffspringConfig")
      .def(py::init([](std::vector<std::uint32_t> counts, double prob) {
             return OffspringConfig{std::move(counts), prob};
           }),
           py::arg("counts"), py::arg("prob"))
      .def_readonly("counts", &OffspringConfig::counts)
      .def_readonly("prob", &OffspringConfig::prob);

  py::class_<BranchingProcess>(m, "BranchingProcess")
      .def(py::init([](std::vector<std::vector<OffspringConfig>> laws) {
             BranchingProcess b;
             b.label_count = static_cast<int>(laws.size());
             b.laws = std::move(laws);
             return b;
           }),
           py::arg("laws"))
      .def_readonly("label_count", &BranchingProcess::label_count)
      .def_readonly("laws", &BranchingProcess::laws);

  py::class_<BranchingReport>(m, "BranchingReport")
      .def_readonly("b1", &BranchingReport::b1)
      .def_readonly("b2", &BranchingReport::b2)
      .def("passed", &BranchingReport::pass);

  m.def("validate_process", &validate_process, py::arg("process"));
  m.def("embed_substitution", &embed_substitution, py::arg("matrix"));
  m.def("d_p_distance", &d_p_distance, py::arg("a"), py::arg("b"), py::arg("p"));
  m.def("sample_realization", &sample_realization, py::arg("process"),
        py::arg("root_label"), py::arg("depth"), py::arg("seed"),
        py::arg("sample_index"), py::arg("vertex_cap") = kDefaultVertexCap);

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("statistic", &FitReport::statistic)
      .def_readonly("dof", &FitReport::dof)
      .def_readonly("p_value", &FitReport::p_value)
      .def_readonly("n", &FitReport::n)
      .def_readonly("unexpected", &FitReport::unexpected);

  m.def("goodness_of_fit",
        [](const BranchingProcess& model, int root_label, std::int64_t n,
           std::uint64_t seed, std::optional<BranchingProcess> sampling) {
          return goodness_of_fit(model, root_label, n, seed,
                                 sampling.has_value() ? &*sampling : nullptr);
        },
        py::arg("model"), py::arg("root_label"), py::arg("n"), py::arg("seed"),
        py::arg("sampling") = std::optional<BranchingProcess>{});

  py::class_<GwMomentEntry>(m, "GwMomentEntry")
      .def_readonly("eta", &GwMomentEntry::eta)
      .def_readonly("energy", &GwMomentEntry::energy)
      .def_readonly("n", &GwMomentEntry::n)
      .def_readonly("mean", &GwMomentEntry::mean)
      .def_readonly("std_error", &GwMomentEntry::std_error)
      .def_readonly("p", &GwMomentEntry::p)
      .def_readonly("depth", &GwMomentEntry::depth)
      .def_readonly("seed", &GwMomentEntry::seed)
      .def_readonly("baseline", &GwMomentEntry::baseline)
      .def_readonly("good_fraction", &GwMomentEntry::good_fraction)
      .def_readonly("d_p", &GwMomentEntry::d_p);

  m.def("gw_moment_statistic", &gw_moment_statistic, py::arg("process"),
        py::arg("matrix"), py::arg("root_label"), py::arg("z"), py::arg("p"),
        py::arg("n_samples"), py::arg("depth"), py::arg("seed"),
        py::arg("settings") = SolverSettings{}, py::arg("good_depth") = 2,
        py::arg("workers") = 1, py::arg("vertex_cap") = kDefaultVertexCap);

  m.def("parse_config_text", [](const std::string& text) {
    const ExperimentConfig cfg = parse_config(text);
    py::dict out;
    out["root_label"] = cfg.root_label;
    out["seed"] = cfg.seed;
    out["hash"] = cfg.hash;
    out["canonical"] = cfg.canonical;
    return out;
  }, py::arg("text"));
}
