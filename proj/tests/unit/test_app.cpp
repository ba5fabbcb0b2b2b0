#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"

#include "cgpdf/app/commands.hpp"
#include "cgpdf/app/config.hpp"
#include "cgpdf/app/io.hpp"

using namespace cgpdf;
using namespace cgpdf::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(CGPDF_TEST_TMP) / name;
  fs::remove_all(p);
  return p;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

RunConfig small(const fs::path& out, std::vector<std::string> sets = {}) {
  json cfg = merge_config(json::object());
  apply_override(cfg, "simulation.L=20");
  apply_override(cfg, "simulation.t_end=0.5");
  apply_override(cfg, "density.t_eval=[0.5]");
  apply_override(cfg, "density.grid_points=12");
  apply_override(cfg, "density.hidden_points=20");
  apply_override(cfg, "reference.L=2000");
  for (const auto& s : sets) apply_override(cfg, s);
  cfg["output"]["dir"] = out.string();
  return parse_config(cfg);
}

std::map<std::string, std::string> checksums(const json& manifest) {
  std::map<std::string, std::string> m;
  for (const auto& f : manifest.at("files")) m[f.at("path")] = f.at("sha256");
  return m;
}

}  // namespace

TEST_CASE("sha256") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("number formatting round-trips") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678}) CHECK(std::stod(fmt(x)) == x);
}

TEST_CASE("config rejects unknown keys and wrong types") {
  CHECK_THROWS_AS(merge_config(json::parse(R"({"simulaton": {}})")), ConfigError);
  CHECK_THROWS_AS(merge_config(json::parse(R"({"simulation": {"LL": 3}})")), ConfigError);
  CHECK_THROWS_AS(merge_config(json::parse(R"({"simulation": {"L": "big"}})")), ConfigError);
  CHECK_THROWS_AS(merge_config(json::parse(R"({"model": {"params": {"A1": "x"}}})")),
                  ConfigError);
  try {
    merge_config(json::parse(R"({"density": {"kapa": 1}})"));
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("density.kapa") != std::string::npos);
  }

  json cfg = merge_config(json::object());
  CHECK_THROWS_AS(apply_override(cfg, "simulation.nope=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "novalue"), ConfigError);
  apply_override(cfg, "model.regime=II");
  CHECK(cfg["model"]["regime"] == "II");
  apply_override(cfg, "model.params.A1=-0.5");
  CHECK(cfg["model"]["params"]["A1"] == -0.5);

  json bad = merge_config(json::object());
  apply_override(bad, "simulation.dt=-1");
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = merge_config(json::object());
  apply_override(bad, "model.params.A3=1.6");
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = merge_config(json::object());
  apply_override(bad, "density.t_eval=[2, 1]");
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = merge_config(json::object());
  apply_override(bad, "model.preset=lorenz");
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("config resolves presets and labels") {
  const RunConfig rc = parse_config(merge_config(json::object()));
  CHECK(rc.model.params.epsilon == 0.1);
  CHECK(rc.model.params.A1 == -2.5);
  CHECK(joint_labels(rc.model) == std::vector<std::string>{"u2", "u3", "u1"});
  CHECK(rc.reference.dt == rc.simulation.dt);
  CHECK(rc.reference.seed != rc.seed);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("atomic writes and manifest") {
  const fs::path root = scratch("io");
  OutputDir out(root);
  out.write("a/b.csv", "x\n1\n");
  out.finish({{"status", "ok"}});
  const json m = read_json(root / "manifest.json");
  REQUIRE(m["files"].size() == 1);
  CHECK(m["files"][0]["path"] == "a/b.csv");
  CHECK(m["files"][0]["sha256"] == sha256_hex("x\n1\n"));
  CHECK(m["files"][0]["bytes"] == 4);
  CHECK_FALSE(fs::exists(root / "manifest.json.tmp"));
}

TEST_CASE("simulate is reproducible") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  CHECK(run_command("simulate", small(a), false) == 0);
  CHECK(run_command("simulate", small(b), false) == 0);
  const json ma = read_json(a / "manifest.json"), mb = read_json(b / "manifest.json");
  CHECK(ma["status"] == "ok");
  CHECK(checksums(ma) == checksums(mb));
  CHECK(checksums(ma).count("trajectories.csv") == 1);
  CHECK(checksums(ma).count("moments.csv") == 1);
  const fs::path c = scratch("sim_c");
  CHECK(run_command("simulate", small(c, {"seed=2"}), false) == 0);
  CHECK(checksums(read_json(c / "manifest.json")) != checksums(ma));
}

TEST_CASE("zero-dynamics simulation keeps constant trajectories") {
  const fs::path p = scratch("sim_zero");
  const RunConfig rc =
      small(p, {"model.preset=triad", "model.params.A1=0", "model.params.A2=0",
                "model.params.A3=0", "model.params.sigma2=0", "model.params.sigma3=0",
                "model.init=[0.5, -1, 2]"});
  CHECK(run_command("simulate", rc, false) == 0);
  std::ifstream in(p / "trajectories.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "sample,t,u1,u2,u3");
  // d2, d3 > 0 still damp u2 and u3; u1 has no dynamics at all.
  while (std::getline(in, line)) {
    const auto c2 = line.find(',', line.find(',') + 1);
    CHECK(std::stod(line.substr(c2 + 1)) == 0.5);
  }
}

TEST_CASE("estimate without evaluation times writes the manifest only") {
  const fs::path p = scratch("est_empty");
  CHECK(run_command("estimate", small(p, {"density.t_eval=[]"}), true) == 0);
  const json m = read_json(p / "manifest.json");
  CHECK(m["files"].empty());
  CHECK_FALSE(m["warnings"].empty());
}

TEST_CASE("estimate with zero hidden noise flags every sample") {
  const fs::path p = scratch("est_deg");
  run_command("estimate", small(p, {"model.preset=triad"}), false);
  const json m = read_json(p / "manifest.json");
  CHECK(m["degenerate_count"] == 20);
  CHECK(fs::exists(p / "t0.5" / "hybrid_u1_u2.csv"));
  CHECK(fs::exists(p / "t0.5" / "true_u2_u3.csv"));
}

TEST_CASE("blow-up is recorded in the manifest") {
  const fs::path p = scratch("blowup");
  const RunConfig rc = small(p, {"model.preset=triad", "model.regime=II",
                                 "simulation.blowup_cap=0.5", "simulation.t_end=5"});
  CHECK_THROWS_AS(run_command("simulate", rc, false), NumericalError);
  CHECK(read_json(p / "manifest.json")["status"] == "blowup");
}
