#include <complex>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conetree/config.hpp"
#include "conetree/galton_watson.hpp"
#include "conetree/green.hpp"
#include "conetree/io.hpp"
#include "conetree/perturbation.hpp"
#include "conetree/truncation.hpp"
#include "conetree/version.hpp"

namespace {

using namespace conetree;

struct CommonOpts {
  std::string config_path;
  std::string out;        // output path prefix; overrides the config
  std::string format;     // csv | json; overrides the config
  int workers = 1;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("config", opts.config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out, "output path prefix");
  cmd->add_option("--format", opts.format, "output format (csv or json)")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--workers", opts.workers, "worker threads")
      ->check(CLI::PositiveNumber);
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&opts](std::uint64_t s) { opts.seed = s; }, "seed override");
}

ExperimentConfig load(const CommonOpts& opts) {
  ExperimentConfig cfg = load_config(opts.config_path);
  if (!opts.out.empty()) cfg.output.path = opts.out;
  if (!opts.format.empty()) cfg.output.format = opts.format;
  if (opts.seed.has_value()) cfg.seed = *opts.seed;
  return cfg;
}

// Writes payload + manifest next to it and echoes the file list.
void emit(const ExperimentConfig& cfg, const std::string& command,
          const std::string& payload, const std::string& extension) {
  if (cfg.output.path.empty()) {
    std::cout << payload;
    return;
  }
  const std::string data_path = cfg.output.path + "." + extension;
  const std::string manifest_path = cfg.output.path + ".manifest.json";
  write_text_file(data_path, payload);
  write_text_file(manifest_path,
                  manifest_json(command, cfg.hash, cfg.canonical, {data_path}));
  std::cout << "wrote " << data_path << "\n";
  std::cout << "wrote " << manifest_path << "\n";
}

const PerturbationModel& require_perturbation(const ExperimentConfig& cfg) {
  if (!cfg.perturbation.has_value()) {
    throw MalformedInputError("config: this command needs a 'perturbation' block");
  }
  return *cfg.perturbation;
}

int cmd_validate(const CommonOpts& opts) {
  const ExperimentConfig cfg = load(opts);
  const ValidationReport report = validate_matrix(cfg.matrix);
  std::string text = validation_to_text(cfg.matrix, report);
  if (report.pass()) {
    text += "primitivity exponent: " + std::to_string(primitivity_exponent(cfg.matrix)) +
            "\n";
    text += std::string("regular: ") + (cfg.matrix.is_regular() ? "yes" : "no") + "\n";
  }
  std::cout << text;
  return report.pass() ? 0 : 1;
}

int cmd_build(const CommonOpts& opts, int depth) {
  const ExperimentConfig cfg = load(opts);
  const TruncatedTree tree = build_tree(cfg.matrix, cfg.root_label, depth, cfg.vertex_cap);
  std::cout << "vertices: " << tree.size() << "\n";
  emit(cfg, "build", spheres_to_csv(cfg.matrix, tree), "csv");
  return 0;
}

int cmd_bands(const CommonOpts& opts, const std::vector<double>& window,
              std::optional<double> grid_step, std::optional<std::string> label) {
  const ExperimentConfig cfg = load(opts);
  DetectSettings d = cfg.detect;
  if (!window.empty()) d.window = std::make_pair(window[0], window[1]);
  if (grid_step.has_value()) d.coarse_step = *grid_step;
  const int root = label.has_value() ? cfg.matrix.label_index(*label) : cfg.root_label;
  const BandList bands = detect_bands(cfg.matrix, root, cfg.solver, d, opts.workers);
  const bool json_out = cfg.output.format == "json";
  emit(cfg, "bands", json_out ? bands_to_json(bands) : bands_to_csv(bands),
       json_out ? "json" : "csv");
  return 0;
}

int cmd_dos(const CommonOpts& opts, const std::vector<double>& window,
            std::optional<double> grid_step, std::optional<double> eta,
            std::optional<std::string> label) {
  ExperimentConfig cfg = load(opts);
  if (eta.has_value()) {
    cfg.solver.eta_floor = *eta;
    cfg.solver.eta_schedule = default_eta_schedule(*eta);
  }
  auto [lo, hi] = *cfg.detect.window;
  if (!window.empty()) {
    lo = window[0];
    hi = window[1];
  }
  const double step = grid_step.value_or(cfg.detect.coarse_step);
  if (!(step > 0.0)) throw MalformedInputError("dos: grid step must be positive");
  std::vector<double> energies;
  for (std::size_t k = 0;; ++k) {
    const double e = lo + static_cast<double>(k) * step;
    if (e >= hi) break;
    energies.push_back(e);
  }
  energies.push_back(hi);
  const int root = label.has_value() ? cfg.matrix.label_index(*label) : cfg.root_label;
  const DosCurve curve = dos_curve(cfg.matrix, root, energies, cfg.solver, opts.workers);
  std::cout << "integral: " << format_full(curve.integral()) << "\n";
  const bool json_out = cfg.output.format == "json";
  emit(cfg, "dos", json_out ? dos_to_json(curve) : dos_to_csv(curve),
       json_out ? "json" : "csv");
  return 0;
}

int cmd_green(const CommonOpts& opts, double energy, std::optional<double> eta) {
  const ExperimentConfig cfg = load(opts);
  GreenVector gv;
  if (eta.has_value()) {
    gv = solve_green(cfg.matrix, Complex{energy, *eta}, cfg.solver);
  } else {
    gv = solve_at_energy(cfg.matrix, energy, cfg.solver);
  }
  for (int j = 0; j < cfg.matrix.label_count(); ++j) {
    std::cout << cfg.matrix.labels()[j] << ": " << format_full(gv.values[j].real())
              << " " << format_full(gv.values[j].imag()) << "i\n";
  }
  std::cout << "iterations: " << gv.iterations << "\n";
  if (!cfg.output.path.empty()) {
    emit(cfg, "green", green_to_json(gv, cfg.matrix.labels()), "json");
  }
  return 0;
}

int cmd_random(const CommonOpts& opts, int samples, std::optional<int> depth, double p,
               std::vector<double> etas, std::optional<double> energy_flag,
               bool band_check) {
  const ExperimentConfig cfg = load(opts);
  const PerturbationModel& pm = require_perturbation(cfg);
  const double energy = energy_flag.has_value()
                            ? *energy_flag
                            : cfg.energy.value_or(0.0);
  if (etas.empty()) etas = {0.1, 0.03, 0.01, 3e-3, 1e-3};
  BandList bands;
  if (band_check) {
    bands = detect_bands(cfg.matrix, cfg.root_label, cfg.solver, cfg.detect, opts.workers);
  }
  const MomentReport report = eta_sweep(
      cfg.matrix, cfg.root_label, energy, pm, p, etas, samples, cfg.seed, cfg.solver,
      depth.has_value() ? std::optional<int>(*depth) : std::nullopt,
      band_check ? &bands : nullptr, 0.1, cfg.vertex_cap, opts.workers);
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
  const bool json_out = cfg.output.format == "json";
  emit(cfg, "random", json_out ? moments_to_json(report) : moments_to_csv(report),
       json_out ? "json" : "csv");
  return 0;
}

int cmd_radial(const CommonOpts& opts, double p, std::vector<double> etas,
               std::optional<double> energy_flag) {
  const ExperimentConfig cfg = load(opts);
  if (!cfg.radial.has_value()) {
    throw MalformedInputError("config: this command needs a 'radial' block");
  }
  const double energy = energy_flag.has_value() ? *energy_flag
                                                : cfg.energy.value_or(0.0);
  if (etas.empty()) etas = {0.1, 0.01, 1e-3, 1e-4, 1e-5};
  const MomentReport report = radial_sweep(cfg.matrix, cfg.root_label, *cfg.radial,
                                           cfg.radial_lambda, energy, etas, p,
                                           cfg.solver);
  const bool json_out = cfg.output.format == "json";
  emit(cfg, "radial", json_out ? radial_to_json(report) : radial_to_csv(report),
       json_out ? "json" : "csv");
  return 0;
}

int cmd_gw(const CommonOpts& opts, int samples, int depth, double p,
           std::vector<double> etas, std::optional<double> energy_flag, int good_depth) {
  const ExperimentConfig cfg = load(opts);
  if (!cfg.branching.has_value()) {
    throw MalformedInputError("config: this command needs a 'branching' block");
  }
  const double energy = energy_flag.has_value() ? *energy_flag
                                                : cfg.energy.value_or(0.0);
  if (etas.empty()) etas = {0.1, 0.01};
  std::vector<GwMomentEntry> entries;
  for (double eta : etas) {
    entries.push_back(gw_moment_statistic(*cfg.branching, cfg.matrix, cfg.root_label,
                                          Complex{energy, eta}, p, samples, depth,
                                          cfg.seed, cfg.solver, good_depth,
                                          opts.workers, cfg.vertex_cap));
  }
  const bool json_out = cfg.output.format == "json";
  emit(cfg, "gw", json_out ? gw_to_json(entries) : gw_to_csv(entries),
       json_out ? "json" : "csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral toolkit for substitution trees"};
  app.set_version_flag("--version", CONETREE_VERSION);
  app.require_subcommand(1);

  CommonOpts validate_opts;
  CLI::App* validate = app.add_subcommand("validate", "check the matrix axioms");
  add_common(validate, validate_opts);

  CommonOpts build_opts;
  int build_depth = 5;
  CLI::App* build = app.add_subcommand("build", "materialize a truncation");
  add_common(build, build_opts);
  build->add_option("--depth", build_depth, "truncation depth")->required();

  CommonOpts bands_opts;
  std::vector<double> bands_window;
  std::optional<double> bands_step;
  std::optional<std::string> bands_label;
  CLI::App* bands = app.add_subcommand("bands", "locate spectral bands");
  add_common(bands, bands_opts);
  bands->add_option("--window", bands_window, "energy window lo hi")->expected(2);
  bands->add_option("--grid-step", bands_step, "coarse scan step");
  bands->add_option("--label", bands_label, "root label override");

  CommonOpts dos_opts;
  std::vector<double> dos_window;
  std::optional<double> dos_step, dos_eta;
  std::optional<std::string> dos_label;
  CLI::App* dos = app.add_subcommand("dos", "density-of-states curve");
  add_common(dos, dos_opts);
  dos->add_option("--window", dos_window, "energy window lo hi")->expected(2);
  dos->add_option("--grid-step", dos_step, "grid step");
  dos->add_option("--eta", dos_eta, "smoothing eta (overrides the schedule floor)");
  dos->add_option("--label", dos_label, "root label override");

  CommonOpts green_opts;
  double green_energy = 0.0;
  std::optional<double> green_eta;
  CLI::App* green = app.add_subcommand("green", "fixed point at one energy");
  add_common(green, green_opts);
  green->add_option("--energy", green_energy, "Re z")->required();
  green->add_option("--eta", green_eta, "Im z (default: descend the schedule)");

  CommonOpts random_opts;
  int random_samples = 100;
  std::optional<int> random_depth;
  double random_p = 2.0;
  std::vector<double> random_etas;
  std::optional<double> random_energy;
  bool random_band_check = false;
  CLI::App* random = app.add_subcommand("random", "random decoration moment sweep");
  add_common(random, random_opts);
  random->add_option("--samples", random_samples, "realizations per eta")
      ->check(CLI::PositiveNumber);
  random->add_option("--depth", random_depth, "fixed truncation depth");
  random->add_option("--p", random_p, "moment order");
  random->add_option("--eta-schedule", random_etas, "decreasing etas");
  random->add_option("--energy", random_energy, "energy override");
  random->add_flag("--band-check", random_band_check,
                   "detect bands first and warn about the energy placement");

  CommonOpts radial_opts;
  double radial_p = 1.0;
  std::vector<double> radial_etas;
  std::optional<double> radial_energy;
  CLI::App* radial = app.add_subcommand("radial", "radial potential sweep");
  add_common(radial, radial_opts);
  radial->add_option("--p", radial_p, "moment order");
  radial->add_option("--eta-schedule", radial_etas, "decreasing etas");
  radial->add_option("--energy", radial_energy, "energy override");

  CommonOpts gw_opts;
  int gw_samples = 200;
  int gw_depth = 8;
  double gw_p = 2.0;
  std::vector<double> gw_etas;
  std::optional<double> gw_energy;
  int gw_good_depth = 2;
  CLI::App* gw = app.add_subcommand("gw", "branching-process moment statistic");
  add_common(gw, gw_opts);
  gw->add_option("--samples", gw_samples, "realizations per eta")
      ->check(CLI::PositiveNumber);
  gw->add_option("--depth", gw_depth, "realization depth");
  gw->add_option("--p", gw_p, "moment order");
  gw->add_option("--eta-schedule", gw_etas, "decreasing etas");
  gw->add_option("--energy", gw_energy, "energy override");
  gw->add_option("--good-depth", gw_good_depth, "levels compared against the matrix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // CLI11 returns 0 for --help/--version and nonzero for usage errors;
    // map usage errors to exit code 2.
    return code == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(validate_opts);
    if (build->parsed()) return cmd_build(build_opts, build_depth);
    if (bands->parsed()) return cmd_bands(bands_opts, bands_window, bands_step, bands_label);
    if (dos->parsed()) return cmd_dos(dos_opts, dos_window, dos_step, dos_eta, dos_label);
    if (green->parsed()) return cmd_green(green_opts, green_energy, green_eta);
    if (random->parsed()) {
      return cmd_random(random_opts, random_samples, random_depth, random_p, random_etas,
                        random_energy, random_band_check);
    }
    if (radial->parsed()) return cmd_radial(radial_opts, radial_p, radial_etas, radial_energy);
    if (gw->parsed()) {
      return cmd_gw(gw_opts, gw_samples, gw_depth, gw_p, gw_etas, gw_energy, gw_good_depth);
    }
  } catch (const ConfigParseError& e) {
    std::cerr << "error: " << e.what() << " (line " << e.line << ", column " << e.column
              << ")\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
