#include "conetree/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "conetree/version.hpp"

namespace conetree {

using nlohmann::json;

std::string format_full(double x) {
  // Shortest digit string that round-trips; keeps CSV output readable and
  // consistent with the JSON writer.
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

const char* flag_text(bool bounded) { return bounded ? "bounded" : "unbounded"; }

json complex_to_json(Complex v) { return {{"re", v.real()}, {"im", v.imag()}}; }

}  // namespace

std::string bands_to_csv(const BandList& bands) {
  std::ostringstream out;
  out << "# schema: conetree/bands v1\n";
  out << "band,lo,hi\n";
  for (std::size_t i = 0; i < bands.size(); ++i) {
    out << i << ',' << format_full(bands[i].lo) << ',' << format_full(bands[i].hi)
        << '\n';
  }
  return out.str();
}

std::string bands_to_json(const BandList& bands) {
  json doc;
  doc["schema"] = "conetree/bands v1";
  json arr = json::array();
  for (const Band& b : bands) arr.push_back({{"lo", b.lo}, {"hi", b.hi}});
  doc["bands"] = arr;
  return doc.dump(2) + "\n";
}

std::string dos_to_csv(const DosCurve& curve) {
  std::ostringstream out;
  out << "# schema: conetree/dos v1\n";
  out << "# eta: " << format_full(curve.eta) << "\n";
  out << "energy,rho\n";
  for (std::size_t i = 0; i < curve.energy.size(); ++i) {
    out << format_full(curve.energy[i]) << ',' << format_full(curve.rho[i]) << '\n';
  }
  return out.str();
}

std::string dos_to_json(const DosCurve& curve) {
  json doc;
  doc["schema"] = "conetree/dos v1";
  doc["eta"] = curve.eta;
  doc["root_label"] = curve.root_label;
  doc["energy"] = curve.energy;
  doc["rho"] = curve.rho;
  return doc.dump(2) + "\n";
}

std::string moments_to_csv(const MomentReport& report) {
  std::ostringstream out;
  out << "# schema: conetree/moments v1\n";
  for (const std::string& w : report.warnings) out << "# warning: " << w << '\n';
  out << "eta,energy,n,mean,stderr,flag,p,lambda,depth,seed,baseline\n";
  for (const MomentEntry& e : report.entries) {
    out << format_full(e.eta) << ',' << format_full(e.energy) << ',' << e.n << ','
        << format_full(e.mean) << ',' << format_full(e.std_error) << ','
        << flag_text(report.bounded) << ',' << format_full(e.p) << ','
        << format_full(e.lambda) << ',' << e.depth << ',' << e.seed << ','
        << format_full(e.baseline) << '\n';
  }
  return out.str();
}

namespace {

json moment_entry_to_json(const MomentEntry& e) {
  return {{"eta", e.eta},       {"energy", e.energy}, {"n", e.n},
          {"mean", e.mean},     {"stderr", e.std_error}, {"p", e.p},
          {"lambda", e.lambda}, {"depth", e.depth},   {"seed", e.seed},
          {"baseline", e.baseline}};
}

}  // namespace

std::string moments_to_json(const MomentReport& report) {
  json doc;
  doc["schema"] = "conetree/moments v1";
  doc["flag"] = flag_text(report.bounded);
  doc["warnings"] = report.warnings;
  json rows = json::array();
  for (const MomentEntry& e : report.entries) rows.push_back(moment_entry_to_json(e));
  doc["rows"] = rows;
  return doc.dump(2) + "\n";
}

std::string radial_to_csv(const MomentReport& report) {
  std::ostringstream out;
  out << "# schema: conetree/radial v1\n";
  for (const std::string& w : report.warnings) out << "# warning: " << w << '\n';
  out << "eta,energy,n,mean,stderr,flag,p,lambda,cutoff,im_green\n";
  for (const MomentEntry& e : report.entries) {
    out << format_full(e.eta) << ',' << format_full(e.energy) << ',' << e.n << ','
        << format_full(e.mean) << ',' << format_full(e.std_error) << ','
        << flag_text(report.bounded) << ',' << format_full(e.p) << ','
        << format_full(e.lambda) << ',' << e.depth << ','
        << format_full(e.im_green) << '\n';
  }
  return out.str();
}

std::string radial_to_json(const MomentReport& report) {
  json doc;
  doc["schema"] = "conetree/radial v1";
  doc["flag"] = flag_text(report.bounded);
  doc["warnings"] = report.warnings;
  json rows = json::array();
  for (const MomentEntry& e : report.entries) {
    json row = moment_entry_to_json(e);
    row["im_green"] = e.im_green;
    rows.push_back(row);
  }
  doc["rows"] = rows;
  return doc.dump(2) + "\n";
}

std::string gw_to_csv(const std::vector<GwMomentEntry>& entries) {
  std::ostringstream out;
  out << "# schema: conetree/gw v1\n";
  out << "eta,energy,n,mean,stderr,p,depth,seed,baseline,good_fraction,d_p\n";
  for (const GwMomentEntry& e : entries) {
    out << format_full(e.eta) << ',' << format_full(e.energy) << ',' << e.n << ','
        << format_full(e.mean) << ',' << format_full(e.std_error) << ','
        << format_full(e.p) << ',' << e.depth << ',' << e.seed << ','
        << format_full(e.baseline) << ',' << format_full(e.good_fraction) << ','
        << format_full(e.d_p) << '\n';
  }
  return out.str();
}

std::string gw_to_json(const std::vector<GwMomentEntry>& entries) {
  json doc;
  doc["schema"] = "conetree/gw v1";
  json rows = json::array();
  for (const GwMomentEntry& e : entries) {
    rows.push_back({{"eta", e.eta},
                    {"energy", e.energy},
                    {"n", e.n},
                    {"mean", e.mean},
                    {"stderr", e.std_error},
                    {"p", e.p},
                    {"depth", e.depth},
                    {"seed", e.seed},
                    {"baseline", e.baseline},
                    {"good_fraction", e.good_fraction},
                    {"d_p", e.d_p}});
  }
  doc["rows"] = rows;
  return doc.dump(2) + "\n";
}

std::string spheres_to_csv(const SubstitutionMatrix& m, const TruncatedTree& t) {
  std::ostringstream out;
  out << "# schema: conetree/spheres v1\n";
  out << "n";
  for (const std::string& label : m.labels()) out << ',' << label;
  out << ",total\n";
  for (int n = 0; n <= t.depth_cap; ++n) {
    const std::vector<std::uint64_t> counts = t.census(n);
    std::uint64_t total = 0;
    out << n;
    for (std::uint64_t c : counts) {
      out << ',' << c;
      total += c;
    }
    out << ',' << total << '\n';
  }
  return out.str();
}

std::string green_to_json(const GreenVector& gv, const std::vector<std::string>& labels) {
  json doc;
  doc["schema"] = "conetree/green v1";
  doc["z"] = complex_to_json(gv.z);
  doc["residual"] = gv.residual;
  doc["iterations"] = gv.iterations;
  json values = json::object();
  for (std::size_t j = 0; j < gv.values.size(); ++j) {
    values[labels[j]] = complex_to_json(gv.values[j]);
  }
  doc["values"] = values;
  return doc.dump(2) + "\n";
}

std::string validation_to_text(const SubstitutionMatrix& m, const ValidationReport& r) {
  std::ostringstream out;
  out << "M0 single-label entry >= 2: " << (r.m0 ? "pass" : "fail") << '\n';
  out << "M1 positive diagonal: " << (r.m1 ? "pass" : "fail");
  if (r.m1_witness.has_value()) {
    out << " (label '" << m.labels()[*r.m1_witness] << "')";
  }
  out << '\n';
  out << "M2 primitivity: " << (r.m2 ? "pass" : "fail");
  if (r.m2_witness.has_value()) {
    out << " (pair '" << m.labels()[r.m2_witness->first] << "', '"
        << m.labels()[r.m2_witness->second] << "' stays unreachable)";
  }
  out << '\n';
  out << "result: " << (r.pass() ? "pass" : "fail") << '\n';
  return out.str();
}

std::string manifest_json(const std::string& command, const std::string& config_hash,
                          const std::string& canonical_config,
                          const std::vector<std::string>& outputs) {
  json doc;
  doc["schema"] = "conetree/manifest v1";
  doc["command"] = command;
  doc["version"] = CONETREE_VERSION;
  doc["config_hash"] = config_hash;
  doc["config"] = json::parse(canonical_config);
  doc["outputs"] = outputs;
  return doc.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MalformedInputError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw MalformedInputError("failed writing '" + path + "'");
}

}  // namespace conetree
