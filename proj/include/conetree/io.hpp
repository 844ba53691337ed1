#pragma once

#include <string>
#include <vector>

#include "conetree/galton_watson.hpp"
#include "conetree/green.hpp"
#include "conetree/perturbation.hpp"
#include "conetree/tree.hpp"

namespace conetree {

// Full-precision decimal text; parses back to the same double.
std::string format_full(double x);

std::string bands_to_csv(const BandList& bands);
std::string bands_to_json(const BandList& bands);

std::string dos_to_csv(const DosCurve& curve);
std::string dos_to_json(const DosCurve& curve);

std::string moments_to_csv(const MomentReport& report);
std::string moments_to_json(const MomentReport& report);

std::string radial_to_csv(const MomentReport& report);
std::string radial_to_json(const MomentReport& report);

std::string gw_to_csv(const std::vector<GwMomentEntry>& entries);
std::string gw_to_json(const std::vector<GwMomentEntry>& entries);

std::string spheres_to_csv(const SubstitutionMatrix& m, const TruncatedTree& t);

std::string green_to_json(const GreenVector& gv, const std::vector<std::string>& labels);

std::string validation_to_text(const SubstitutionMatrix& m, const ValidationReport& r);

// Run manifest: command, version, config fingerprint, the resolved config
// itself, and the files written. Deliberately carries no timestamps so that
// reruns are byte-identical.
std::string manifest_json(const std::string& command, const std::string& config_hash,
                          const std::string& canonical_config,
                          const std::vector<std::string>& outputs);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace conetree
