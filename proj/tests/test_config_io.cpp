#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "gsmp/config.hpp"

using namespace gsmp;
using nlohmann::json;

namespace {

std::string temp_path(const char* name) {
  return std::string("/tmp/gsmp_test_") + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("config serialization round trips") {
  ExperimentConfig c = default_config();
  c.E = make_interval_system(-2.5, 2.5, {{-1.6, -1.0}, {0.9, 1.5}});
  c.half_width = 72;
  c.flow_steps = 31;
  c.perturbation.family = PerturbationSpec::Family::PowerDecay;
  c.perturbation.amplitude = 0.05;
  c.perturbation.exponent = 0.5;
  c.perturbation.seed = 99;
  c.truncation_sizes = {128, 256};
  c.exec = Exec::OpenMP;
  c.seed = 12345;
  c.quiet = true;

  const json j1 = config_to_json(c);
  const ExperimentConfig back = config_from_json(j1);
  const json j2 = config_to_json(back);
  CHECK(j1.dump() == j2.dump());  // byte-stable echo

  CHECK(back.E.gaps.size() == 2);
  CHECK(back.half_width == 72);
  CHECK(back.perturbation.family == PerturbationSpec::Family::PowerDecay);
  CHECK(back.perturbation.seed == 99);
  CHECK(back.truncation_sizes == std::vector<int>{128, 256});
  CHECK(back.exec == Exec::OpenMP);
  CHECK(back.quiet == true);
}

TEST_CASE("seventeen significant digits reparse exactly") {
  for (double x : {1.0 / 3.0, 0.1, -2.5, 6.02214076e23, 1e-300, 0.0,
                   3.141592653589793}) {
    const std::string s = fmt17(x);
    CHECK(std::stod(s) == x);
  }
}

TEST_CASE("config files: load, reject malformed, validate ranges") {
  const std::string good = temp_path("good.json");
  write_text_file(good, config_to_json(default_config()).dump(2) + "\n");
  const ExperimentConfig c = load_config(good);
  CHECK(c.half_width == default_config().half_width);

  const std::string bad = temp_path("bad.json");
  write_text_file(bad, "{ not json ]");
  CHECK_THROWS_AS(load_config(bad), std::invalid_argument);
  CHECK_THROWS_AS(load_config(temp_path("missing-file.json")), std::invalid_argument);

  ExperimentConfig narrow = default_config();
  narrow.flow_steps = 100;
  narrow.half_width = 20;  // cannot keep the diagnostic blocks trusted
  CHECK_THROWS_AS(narrow.validate(), std::invalid_argument);

  ExperimentConfig badeta = default_config();
  badeta.eta = 1.0;
  CHECK_THROWS_AS(badeta.validate(), std::invalid_argument);

  json j = config_to_json(default_config());
  j["perturbation"]["family"] = "gaussian";
  CHECK_THROWS_AS(config_from_json(j), std::invalid_argument);

  std::remove(good.c_str());
  std::remove(bad.c_str());
}

TEST_CASE("window and point serialization carries full precision") {
  const PotentialV V = solve_potential(make_interval_system(-2.0, 2.0, {{-1.0, 1.0}})).V;
  const IsoPoint pt = solve_iso_point(V, anchor_pair(V));
  const json jp = iso_point_to_json(pt);
  REQUIRE(jp.contains("p"));
  REQUIRE(jp.contains("q"));
  CHECK(jp["p"].size() == 2);
  // values survive a serialize/parse cycle bit-exactly
  const json jp2 = json::parse(jp.dump());
  CHECK(jp2["p"][0].get<double>() == pt.pair.p(0));
  CHECK(jp2["p"][1].get<double>() == pt.pair.p(1));

  const GsmpWindow w = build_periodic(pt, 4);
  const json jw = json::parse(window_to_json(w).dump());
  CHECK(jw["j_min"].get<long>() == -4);
  CHECK(jw["blocks"].size() == 8);
  CHECK(jw["blocks"][0]["p"][0].get<double>() == pt.pair.p(0));
}

TEST_CASE("tabular writers produce the documented headers") {
  JacobiWindow J;
  J.n_lo = 0;
  J.a = {1.5, 0.5};
  J.b = {0.0, 0.25};
  const std::string jc = temp_path("jacobi.csv");
  write_jacobi_csv(jc, J);
  const std::string text = slurp(jc);
  CHECK(text.rfind("n,a,b\n", 0) == 0);
  CHECK(text.find("\n1,") != std::string::npos);

  const std::string sc = temp_path("series.csv");
  write_series_csv(sc, "drop", {0.5, 0.25}, 1);
  const std::string stext = slurp(sc);
  CHECK(stext.rfind("index,drop\n", 0) == 0);
  CHECK(stext.find("\n2,") != std::string::npos);

  std::remove(jc.c_str());
  std::remove(sc.c_str());
}

TEST_CASE("run summaries embed manifest and metadata") {
  RunArtifacts art;
  art.add("config", "out/config.json");
  art.add("trace", "out/flow_trace.jsonl");
  art.metadata["steps"] = 12;
  const std::string sp = temp_path("summary.json");
  art.write_summary(sp);
  const json j = json::parse(slurp(sp));
  CHECK(j["version"] == kVersion);
  CHECK(j["manifest"].size() == 2);
  CHECK(j["metadata"]["steps"] == 12);
  std::remove(sp.c_str());
}
