#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gsmp/analysis.hpp"
#include "gsmp/exec.hpp"
#include "gsmp/flow.hpp"
#include "gsmp/interval_system.hpp"
#include "gsmp/iso.hpp"
#include "gsmp/window.hpp"

namespace gsmp {

inline constexpr char kVersion[] = "0.1.0";

// One self-describing run configuration.  Every command reads the same
// structure; command-line flags override individual fields; the full echo
// is embedded in run outputs for provenance.
struct ExperimentConfig {
  IntervalSystem E;  // defaults to [-2,2] with the (-1,1) gap removed

  double solver_tol = 1e-12;
  double class_margin = 1e-8;

  int torus_count = 8;
  long half_width = 64;  // window blocks per side

  int flow_steps = 40;
  bool dual_path = true;
  double dual_tol = 1e-9;

  PerturbationSpec perturbation;  // family none unless configured

  std::vector<int> truncation_sizes = {500, 1000, 2000};
  double eta = 0.9;
  double eps = 0.0;         // 0: auto (5/N)
  double edge_delta = 0.0;  // 0: auto (1/sqrt(N))
  int nodes_per_band = 201;

  std::uint64_t seed = 1;
  Exec exec = Exec::Serial;
  std::string out_dir = "out";
  bool quiet = false;

  void validate() const;  // throws std::invalid_argument
};

ExperimentConfig default_config();

nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Decimal, 17 significant digits: parses back to the identical double.
std::string fmt17(double x);

nlohmann::json iso_point_to_json(const IsoPoint& pt);
nlohmann::json window_to_json(const GsmpWindow& w);
nlohmann::json ks_report_to_json(const KsReport& report);

void write_text_file(const std::string& path, const std::string& content);

// One JSON object per line: the per-step diagnostics, then the iterate.
void write_flow_trace_jsonl(const std::string& path, const FlowTrace& trace);

// Header n,a,b; one row per coefficient index.
void write_jacobi_csv(const std::string& path, const JacobiWindow& J);

// Header eigenvalue,weight.
void write_spectral_csv(const std::string& path, const SpectralData& sd);

// Plot-ready two-column series (header "index,<name>").
void write_series_csv(const std::string& path, const std::string& name,
                      const std::vector<double>& values, long first_index = 0);

// Output manifest plus run metadata; reruns with the same config and seed
// produce byte-identical files.
struct RunArtifacts {
  std::vector<std::pair<std::string, std::string>> manifest;  // (kind, path)
  nlohmann::json metadata;

  void add(const std::string& kind, const std::string& path);
  void write_summary(const std::string& path) const;
};

}  // namespace gsmp
