#include "gsmp/config.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace gsmp {
namespace {

using nlohmann::json;

std::string family_name(PerturbationSpec::Family f) {
  switch (f) {
    case PerturbationSpec::Family::None: return "none";
    case PerturbationSpec::Family::PowerDecay: return "power-decay";
    case PerturbationSpec::Family::Compact: return "compact";
  }
  return "none";
}

PerturbationSpec::Family family_from_name(const std::string& s) {
  if (s == "none") return PerturbationSpec::Family::None;
  if (s == "power-decay") return PerturbationSpec::Family::PowerDecay;
  if (s == "compact") return PerturbationSpec::Family::Compact;
  throw std::invalid_argument("config: unknown perturbation family '" + s + "'");
}

json vector_json(const std::vector<double>& v) { return json(v); }

}  // namespace

void ExperimentConfig::validate() const {
  E.validate();
  if (!(solver_tol > 0)) throw std::invalid_argument("config: solver tol must be positive");
  if (!(class_margin > 0))
    throw std::invalid_argument("config: class margin must be positive");
  if (torus_count < 1) throw std::invalid_argument("config: torus count must be >= 1");
  if (half_width < 4) throw std::invalid_argument("config: window half width must be >= 4");
  if (flow_steps < 0) throw std::invalid_argument("config: flow steps must be >= 0");
  if (flow_steps + 4 > half_width)
    throw std::invalid_argument(
        "config: window too narrow for the requested flow steps (need half_width >= steps + 4)");
  if (!(dual_tol > 0)) throw std::invalid_argument("config: dual tol must be positive");
  if (!(eta > 0 && eta < 1)) throw std::invalid_argument("config: eta must lie in (0,1)");
  if (eps < 0) throw std::invalid_argument("config: eps must be >= 0 (0 = auto)");
  if (edge_delta < 0)
    throw std::invalid_argument("config: edge_delta must be >= 0 (0 = auto)");
  if (nodes_per_band < 2) throw std::invalid_argument("config: nodes_per_band too small");
  for (int n : truncation_sizes)
    if (n < 2) throw std::invalid_argument("config: truncation sizes must be >= 2");
  if (perturbation.amplitude < 0)
    throw std::invalid_argument("config: perturbation amplitude must be >= 0");
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.E = make_interval_system(-2.0, 2.0, {{-1.0, 1.0}});
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json gaps = json::array();
  for (const auto& gp : c.E.gaps) gaps.push_back({gp[0], gp[1]});
  json j;
  j["intervals"] = {{"b0", c.E.b0}, {"a0", c.E.a0}, {"gaps", gaps}};
  j["solver"] = {{"tol", c.solver_tol}, {"class_margin", c.class_margin}};
  j["torus"] = {{"count", c.torus_count}};
  j["window"] = {{"half_width", c.half_width}};
  j["flow"] = {{"steps", c.flow_steps}, {"dual_path", c.dual_path}, {"dual_tol", c.dual_tol}};
  j["perturbation"] = {{"family", family_name(c.perturbation.family)},
                       {"amplitude", c.perturbation.amplitude},
                       {"exponent", c.perturbation.exponent},
                       {"support", c.perturbation.support},
                       {"seed", c.perturbation.seed}};
  j["analysis"] = {{"truncation_sizes", c.truncation_sizes},
                   {"eta", c.eta},
                   {"eps", c.eps},
                   {"edge_delta", c.edge_delta},
                   {"nodes_per_band", c.nodes_per_band}};
  j["seed"] = c.seed;
  j["exec"] = (c.exec == Exec::OpenMP) ? "openmp" : "serial";
  j["out"] = {{"dir", c.out_dir}};
  j["quiet"] = c.quiet;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c = default_config();
  if (j.contains("intervals")) {
    const json& e = j.at("intervals");
    std::vector<std::array<double, 2>> gaps;
    if (e.contains("gaps"))
      for (const auto& gp : e.at("gaps")) gaps.push_back({gp.at(0), gp.at(1)});
    c.E = make_interval_system(e.value("b0", -2.0), e.value("a0", 2.0), std::move(gaps));
  }
  if (j.contains("solver")) {
    c.solver_tol = j.at("solver").value("tol", c.solver_tol);
    c.class_margin = j.at("solver").value("class_margin", c.class_margin);
  }
  if (j.contains("torus")) c.torus_count = j.at("torus").value("count", c.torus_count);
  if (j.contains("window")) c.half_width = j.at("window").value("half_width", c.half_width);
  if (j.contains("flow")) {
    c.flow_steps = j.at("flow").value("steps", c.flow_steps);
    c.dual_path = j.at("flow").value("dual_path", c.dual_path);
    c.dual_tol = j.at("flow").value("dual_tol", c.dual_tol);
  }
  if (j.contains("perturbation")) {
    const json& p = j.at("perturbation");
    c.perturbation.family = family_from_name(p.value("family", std::string("none")));
    c.perturbation.amplitude = p.value("amplitude", 0.0);
    c.perturbation.exponent = p.value("exponent", 1.0);
    c.perturbation.support = p.value("support", long(8));
    c.perturbation.seed = p.value("seed", std::uint64_t(1));
  }
  if (j.contains("analysis")) {
    const json& a = j.at("analysis");
    if (a.contains("truncation_sizes"))
      c.truncation_sizes = a.at("truncation_sizes").get<std::vector<int>>();
    c.eta = a.value("eta", c.eta);
    c.eps = a.value("eps", c.eps);
    c.edge_delta = a.value("edge_delta", c.edge_delta);
    c.nodes_per_band = a.value("nodes_per_band", c.nodes_per_band);
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("exec")) {
    const std::string e = j.at("exec").get<std::string>();
    if (e == "serial")
      c.exec = Exec::Serial;
    else if (e == "openmp")
      c.exec = Exec::OpenMP;
    else
      throw std::invalid_argument("config: exec must be 'serial' or 'openmp'");
  }
  if (j.contains("out")) c.out_dir = j.at("out").value("dir", c.out_dir);
  c.quiet = j.value("quiet", c.quiet);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: malformed JSON in '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json iso_point_to_json(const IsoPoint& pt) {
  std::vector<double> p(pt.pair.p.data(), pt.pair.p.data() + pt.pair.p.size());
  std::vector<double> q(pt.pair.q.data(), pt.pair.q.data() + pt.pair.q.size());
  return json{{"p", vector_json(p)},
              {"q", vector_json(q)},
              {"residual", pt.residual},
              {"margin", pt.margin}};
}

json window_to_json(const GsmpWindow& w) {
  json blocks = json::array();
  for (const BlockPair& b : w.blocks) {
    std::vector<double> p(b.p.data(), b.p.data() + b.p.size());
    std::vector<double> q(b.q.data(), b.q.data() + b.q.size());
    blocks.push_back({{"p", vector_json(p)}, {"q", vector_json(q)}});
  }
  return json{{"j_min", w.j_min},
              {"t_lo", w.t_lo},
              {"t_hi", w.t_hi},
              {"poles", vector_json(w.poles)},
              {"blocks", blocks}};
}

json ks_report_to_json(const KsReport& report) {
  static const char* kFamilyNames[] = {"p_prev_minus_p0", "q_prev_minus_q0",
                                       "lambda0_pg_minus_1", "trace_tail", "residue_gaps"};
  json coeffs;
  coeffs["families"] = json::array();
  for (int f = 0; f < CoefficientDiagnostics::n_families; ++f) {
    coeffs["families"].push_back(
        {{"name", kFamilyNames[f]},
         {"partial", vector_json(report.coeffs.partial[static_cast<size_t>(f)])},
         {"last50_growth", report.coeffs.last50_growth[static_cast<size_t>(f)]}});
  }
  return json{
      {"h_plus",
       {{"j_lo", report.h_plus.j_lo},
        {"summand", vector_json(report.h_plus.summand)},
        {"partial", vector_json(report.h_plus.partial)},
        {"total", report.h_plus.total}}},
      {"hs",
       {{"j_lo", report.hs.j_lo},
        {"per_block", vector_json(report.hs.per_block)},
        {"partial", vector_json(report.hs.partial)},
        {"total", report.hs.total}}},
      {"delta_series", vector_json(report.delta_series)},
      {"spectral",
       {{"ac_term", report.spectral.ac_term},
        {"ev_term", report.spectral.ev_term},
        {"eps", report.spectral.eps},
        {"edge_delta", report.spectral.edge_delta}}},
      {"coeff_diagnostics", coeffs}};
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

void write_flow_trace_jsonl(const std::string& path, const FlowTrace& trace) {
  std::string body;
  for (size_t n = 0; n < trace.iterates.size(); ++n) {
    json line{{"n", trace.steps[n].n},
              {"a", trace.steps[n].a},
              {"b_prev", trace.steps[n].b_prev},
              {"min_lambda_sharp", trace.steps[n].min_lambda_sharp},
              {"dual_max_dev", trace.steps[n].dual_max_dev},
              {"window", window_to_json(trace.iterates[n])}};
    body += line.dump();
    body += '\n';
  }
  write_text_file(path, body);
}

void write_jacobi_csv(const std::string& path, const JacobiWindow& J) {
  std::string body = "n,a,b\n";
  for (size_t i = 0; i < J.a.size(); ++i) {
    body += std::to_string(J.n_lo + static_cast<long>(i));
    body += ',';
    body += fmt17(J.a[i]);
    body += ',';
    body += fmt17(J.b[i]);
    body += '\n';
  }
  write_text_file(path, body);
}

void write_spectral_csv(const std::string& path, const SpectralData& sd) {
  std::string body = "eigenvalue,weight\n";
  for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) {
    body += fmt17(sd.eigenvalues(i));
    body += ',';
    body += fmt17(sd.weights(i));
    body += '\n';
  }
  write_text_file(path, body);
}

void write_series_csv(const std::string& path, const std::string& name,
                      const std::vector<double>& values, long first_index) {
  std::string body = "index," + name + "\n";
  for (size_t i = 0; i < values.size(); ++i) {
    body += std::to_string(first_index + static_cast<long>(i));
    body += ',';
    body += fmt17(values[i]);
    body += '\n';
  }
  write_text_file(path, body);
}

void RunArtifacts::add(const std::string& kind, const std::string& path) {
  manifest.emplace_back(kind, path);
}

void RunArtifacts::write_summary(const std::string& path) const {
  json m = json::array();
  for (const auto& [kind, p] : manifest) m.push_back({{"kind", kind}, {"path", p}});
  json j{{"manifest", m}, {"metadata", metadata}, {"version", kVersion}};
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace gsmp
