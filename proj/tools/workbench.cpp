// Command-line workbench: drives the potential solver, torus sampler,
// Jacobi flow, and the Killip-Simon report pipeline from one JSON config.
//
// Exit codes: 0 = everything certified, 2 = partial results (a
// certification failed or a run stopped early), 1 = usage/config error.
// Reruns with identical config and seed produce byte-identical artifacts,
// so no timestamps or timings are written into files (they go to stdout).

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gsmp/acceptance.hpp"
#include "gsmp/analysis.hpp"
#include "gsmp/config.hpp"
#include "gsmp/fiber.hpp"
#include "gsmp/flow.hpp"
#include "gsmp/iso.hpp"
#include "gsmp/potential.hpp"
#include "gsmp/resolvent.hpp"
#include "gsmp/transfer.hpp"

using nlohmann::json;

namespace {

struct Cli {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int steps = 0;
  double eta = 0.0;
  bool quiet = false;

  CLI::Option* out_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* steps_opt = nullptr;
  CLI::Option* eta_opt = nullptr;
  CLI::Option* quiet_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file (defaults baked in)");
    out_opt = app->add_option("--out", out_dir, "output directory (overrides config)");
    seed_opt = app->add_option("--seed", seed,
                               "override run and perturbation seeds");
    steps_opt = app->add_option("--steps", steps, "override flow step count");
    eta_opt = app->add_option("--eta", eta, "override coefficient-distance weight");
    quiet_opt = app->add_flag("--quiet", quiet, "suppress progress output");
  }

  gsmp::ExperimentConfig effective() const {
    gsmp::ExperimentConfig cfg =
        config_path.empty() ? gsmp::default_config() : gsmp::load_config(config_path);
    if (out_opt && out_opt->count()) cfg.out_dir = out_dir;
    if (seed_opt && seed_opt->count()) {
      cfg.seed = seed;
      cfg.perturbation.seed = seed;
    }
    if (steps_opt && steps_opt->count()) cfg.flow_steps = steps;
    if (eta_opt && eta_opt->count()) cfg.eta = eta;
    if (quiet_opt && quiet_opt->count()) cfg.quiet = true;
    cfg.validate();
    return cfg;
  }
};

void say(const gsmp::ExperimentConfig& cfg, const std::string& line) {
  if (!cfg.quiet) std::printf("%s\n", line.c_str());
}

std::string join(const gsmp::ExperimentConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

gsmp::RunArtifacts start_run(const gsmp::ExperimentConfig& cfg, const char* command) {
  std::filesystem::create_directories(cfg.out_dir);
  gsmp::RunArtifacts art;
  art.metadata["command"] = command;
  art.metadata["version"] = gsmp::kVersion;
  art.metadata["seed"] = cfg.seed;
  const std::string echo = join(cfg, "config.json");
  gsmp::write_text_file(echo, gsmp::config_to_json(cfg).dump(2) + "\n");
  art.add("config", echo);
  return art;
}

int finish_run(const gsmp::ExperimentConfig& cfg, gsmp::RunArtifacts& art, int code) {
  const std::string path = join(cfg, "run_summary.json");
  art.write_summary(path);
  say(cfg, "wrote " + path);
  return code;
}

json potential_json(const gsmp::PotentialV& V) {
  json j;
  j["lambda0"] = V.lambda0;
  j["c0"] = V.c0;
  j["lambda"] = V.lambda;
  j["c"] = V.c;
  return j;
}

int cmd_potential(const gsmp::ExperimentConfig& cfg) {
  gsmp::RunArtifacts art = start_run(cfg, "potential");
  const gsmp::PotentialSolveReport rep = gsmp::solve_potential(cfg.E, cfg.solver_tol);
  const gsmp::PotentialVerifyReport chk =
      gsmp::verify_potential(rep.V, cfg.E, 257, cfg.exec);

  json out;
  out["config"] = gsmp::config_to_json(cfg);
  out["potential"] = potential_json(rep.V);
  out["iterations"] = rep.iterations;
  out["edge_residual"] = rep.residual;
  out["verification"] = {{"ok", chk.ok},
                         {"edge_residual", chk.edge_residual},
                         {"interior_excess", chk.interior_excess},
                         {"exterior_margin", chk.exterior_margin}};
  const std::string path = join(cfg, "potential.json");
  gsmp::write_text_file(path, out.dump(2) + "\n");
  art.add("potential", path);

  say(cfg, "potential: lambda0 = " + gsmp::fmt17(rep.V.lambda0) +
               ", c0 = " + gsmp::fmt17(rep.V.c0) + ", " +
               std::to_string(rep.iterations) + " iterations, edge residual " +
               gsmp::fmt17(rep.residual));
  return finish_run(cfg, art, chk.ok ? 0 : 2);
}

int cmd_torus(const gsmp::ExperimentConfig& cfg) {
  gsmp::RunArtifacts art = start_run(cfg, "torus");
  const gsmp::PotentialV V = gsmp::solve_potential(cfg.E, cfg.solver_tol).V;

  // the closed-form all-q-zero point first, then the sampled spread
  std::vector<gsmp::IsoPoint> pts;
  pts.push_back(gsmp::solve_iso_point(V, gsmp::anchor_pair(V)));
  for (const gsmp::IsoPoint& pt : gsmp::sample_torus(V, cfg.torus_count, cfg.exec))
    pts.push_back(pt);

  json arr = json::array();
  std::string csv = "index,residual,margin,magic_defect\n";
  int certified = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    const double magic = gsmp::fiber_magic_check(pts[i].pair, V.c, V, 64, cfg.exec);
    const bool ok = pts[i].margin > 0.0 && magic < 1e-9;
    if (!ok) {
      say(cfg, "point " + std::to_string(i) + " failed certification, dropped");
      continue;
    }
    ++certified;
    json entry = gsmp::iso_point_to_json(pts[i]);
    entry["magic_defect"] = magic;
    arr.push_back(entry);
    csv += std::to_string(i) + "," + gsmp::fmt17(pts[i].residual) + "," +
           gsmp::fmt17(pts[i].margin) + "," + gsmp::fmt17(magic) + "\n";
  }

  json out;
  out["config"] = gsmp::config_to_json(cfg);
  out["potential"] = potential_json(V);
  out["points"] = arr;
  const std::string jpath = join(cfg, "torus_points.json");
  gsmp::write_text_file(jpath, out.dump(2) + "\n");
  art.add("torus_points", jpath);
  const std::string cpath = join(cfg, "torus_points.csv");
  gsmp::write_text_file(cpath, csv);
  art.add("torus_points_csv", cpath);

  say(cfg, std::to_string(certified) + " of " + std::to_string(pts.size()) +
               " points certified");
  return finish_run(cfg, art, certified > 0 ? 0 : 2);
}

// Shared setup for flow and ks-report: periodic window at the first torus
// point, optional perturbation, class margin checked before anything runs.
gsmp::GsmpWindow prepared_window(const gsmp::ExperimentConfig& cfg,
                                 const gsmp::PotentialV& V, bool* certified) {
  const gsmp::IsoPoint pt = gsmp::solve_iso_point(V, gsmp::anchor_pair(V));
  gsmp::GsmpWindow w = gsmp::build_periodic(pt, cfg.half_width);
  w = gsmp::apply_perturbation(w, cfg.perturbation);
  *certified = gsmp::check_gsmp_class(w, cfg.class_margin).certified;
  return w;
}

int cmd_flow(const gsmp::ExperimentConfig& cfg) {
  gsmp::RunArtifacts art = start_run(cfg, "flow");
  const gsmp::PotentialV V = gsmp::solve_potential(cfg.E, cfg.solver_tol).V;
  bool certified = false;
  const gsmp::GsmpWindow w0 = prepared_window(cfg, V, &certified);
  if (!certified) {
    say(cfg, "perturbed window failed the class-margin check; nothing to run");
    return finish_run(cfg, art, 2);
  }

  gsmp::FlowOptions opts;
  opts.dual_path = cfg.dual_path;
  opts.class_margin = cfg.class_margin;
  opts.dual_tol = cfg.dual_tol;
  const gsmp::FlowTrace trace = gsmp::flow_run(w0, cfg.flow_steps, opts);

  const std::string tpath = join(cfg, "flow_trace.jsonl");
  gsmp::write_flow_trace_jsonl(tpath, trace);
  art.add("flow_trace", tpath);

  if (trace.iterates.size() >= 2) {
    const gsmp::JacobiWindow jw = gsmp::extract_jacobi(trace);
    const std::string jpath = join(cfg, "jacobi_window.csv");
    gsmp::write_jacobi_csv(jpath, jw);
    art.add("jacobi_window", jpath);
  }

  art.metadata["steps_taken"] = trace.iterates.size() - 1;
  art.metadata["early_stop"] = trace.early_stop;
  if (trace.early_stop >= 0) {
    say(cfg, "flow stopped early before step " + std::to_string(trace.early_stop) +
                 "; partial trace written");
    return finish_run(cfg, art, 2);
  }
  say(cfg, "flow: " + std::to_string(trace.iterates.size() - 1) + " steps, a(0) = " +
               gsmp::fmt17(trace.steps.front().a));
  return finish_run(cfg, art, 0);
}

int cmd_ks_report(const gsmp::ExperimentConfig& cfg) {
  gsmp::RunArtifacts art = start_run(cfg, "ks-report");
  const gsmp::PotentialV V = gsmp::solve_potential(cfg.E, cfg.solver_tol).V;
  bool certified = false;
  const gsmp::GsmpWindow w0 = prepared_window(cfg, V, &certified);
  if (!certified) {
    say(cfg, "perturbed window failed the class-margin check; nothing to run");
    return finish_run(cfg, art, 2);
  }

  gsmp::FlowOptions opts;
  opts.dual_path = cfg.dual_path;
  opts.class_margin = cfg.class_margin;
  opts.dual_tol = cfg.dual_tol;
  const gsmp::FlowTrace trace = gsmp::flow_run(w0, cfg.flow_steps, opts);

  gsmp::KsReport report;
  const long j_hi = cfg.half_width - 2;
  const gsmp::VBlocks vb = gsmp::assemble_v_blocks(w0, V, 0, j_hi, cfg.exec);
  report.h_plus = gsmp::ks_functional_H(vb, 1, j_hi - 1);
  report.hs = gsmp::hs_residual_report(vb);
  report.delta_series = gsmp::ks_delta_series(trace, V);
  report.coeffs = gsmp::ks_coefficient_diagnostics(trace, V);

  // spectral terms per truncation size, clamped to what the window affords
  const long max_rows = (w0.t_hi + 1) * w0.bs();
  std::string terms_csv = "N,ac_term,ev_term\n";
  gsmp::SpectralData largest;
  std::vector<int> used;
  for (int n : cfg.truncation_sizes) {
    const int n_use = static_cast<int>(std::min<long>(n, max_rows));
    if (std::find(used.begin(), used.end(), n_use) != used.end()) continue;
    used.push_back(n_use);
    const gsmp::SpectralData sd = gsmp::spectral_data(w0, n_use);
    gsmp::KsSpectralOptions so;
    so.eps = cfg.eps;
    so.edge_delta = cfg.edge_delta;
    so.nodes_per_band = cfg.nodes_per_band;
    so.exec = cfg.exec;
    const gsmp::KsSpectralTerms terms = gsmp::ks_spectral_side(sd, cfg.E, so);
    terms_csv += std::to_string(n_use) + "," + gsmp::fmt17(terms.ac_term) + "," +
                 gsmp::fmt17(terms.ev_term) + "\n";
    report.spectral = terms;
    largest = sd;
  }

  json out = gsmp::ks_report_to_json(report);
  out["config"] = gsmp::config_to_json(cfg);
  const std::string rpath = join(cfg, "ks_report.json");
  gsmp::write_text_file(rpath, out.dump(2) + "\n");
  art.add("ks_report", rpath);

  const std::string hpath = join(cfg, "h_partial.csv");
  gsmp::write_series_csv(hpath, "h_partial", report.h_plus.partial, report.h_plus.j_lo);
  art.add("h_partial", hpath);

  const std::string spath = join(cfg, "hs_partial.csv");
  gsmp::write_series_csv(spath, "hs_partial", report.hs.partial, report.hs.j_lo);
  art.add("hs_partial", spath);

  const std::string dpath = join(cfg, "delta_series.csv");
  gsmp::write_series_csv(dpath, "delta", report.delta_series, 0);
  art.add("delta_series", dpath);

  const std::string tpath = join(cfg, "spectral_terms.csv");
  gsmp::write_text_file(tpath, terms_csv);
  art.add("spectral_terms", tpath);

  if (largest.N > 0) {
    const std::string epath = join(cfg, "spectral_data.csv");
    gsmp::write_spectral_csv(epath, largest);
    art.add("spectral_data", epath);
  }

  say(cfg, "H_+ total " + gsmp::fmt17(report.h_plus.total) + ", HS total " +
               gsmp::fmt17(report.hs.total));
  return finish_run(cfg, art, trace.early_stop >= 0 ? 2 : 0);
}

int cmd_verify(const gsmp::ExperimentConfig& cfg) {
  (void)cfg;
  const int failures = gsmp::acceptance_main();
  return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-gap Jacobi workbench"};
  app.require_subcommand(1);

  Cli cli;
  struct Sub {
    const char* name;
    const char* desc;
    int (*run)(const gsmp::ExperimentConfig&);
  };
  const Sub subs[] = {
      {"potential", "solve and verify the band potential", cmd_potential},
      {"torus", "sample and certify isospectral points", cmd_torus},
      {"flow", "run the Jacobi flow and extract coefficients", cmd_flow},
      {"ks-report", "emit the full functional report", cmd_ks_report},
      {"verify", "run the acceptance suite", cmd_verify},
  };
  // shared flags live on the parent; subcommand arguments fall through to it
  cli.attach(&app);
  for (const Sub& s : subs) app.add_subcommand(s.name, s.desc)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  }

  try {
    const gsmp::ExperimentConfig cfg = cli.effective();
    for (const Sub& s : subs)
      if (app.got_subcommand(s.name)) return s.run(cfg);
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
