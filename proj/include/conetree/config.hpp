#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "conetree/galton_watson.hpp"
#include "conetree/green.hpp"
#include "conetree/perturbation.hpp"

namespace conetree {

struct OutputPrefs {
  std::string format = "csv";  // csv | json
  std::string path;            // output path prefix; empty = stdout only
};

// A fully resolved experiment description: every optional field carries its
// default, `canonical` is the sorted-key JSON of the resolved state, and
// `hash` fingerprints it.
struct ExperimentConfig {
  explicit ExperimentConfig(SubstitutionMatrix m) : matrix(std::move(m)) {}

  SubstitutionMatrix matrix;
  int root_label = 0;
  SolverSettings solver;
  DetectSettings detect;
  std::uint64_t vertex_cap = kDefaultVertexCap;

  std::optional<PerturbationModel> perturbation;
  std::optional<double> energy;
  std::optional<RadialPotential> radial;
  double radial_lambda = 0.0;
  std::optional<BranchingProcess> branching;

  OutputPrefs output;
  std::uint64_t seed = 0;

  std::string canonical;
  std::string hash;
};

std::uint64_t fnv1a64(std::string_view text);

// Parses and resolves a config document. Syntax problems raise
// ConfigParseError with a line/column; semantic problems raise
// MalformedInputError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace conetree
