#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "roacert/pipeline.hpp"

using namespace roacert;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(ROACERT_SOURCE_DIR) / "configs";

class Cli : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("roacert_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  // Exit status of `roacert <args>`, with stdout/stderr captured to files.
  int run(const std::string& args) {
    const std::string cmd = std::string("\"") + ROACERT_CLI + "\" " + args + " > \"" + (dir / "stdout").string() +
                            "\" 2> \"" + (dir / "stderr").string() + "\"";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }
  std::string slurp(const fs::path& p) const {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  std::string err() const { return slurp(dir / "stderr"); }
  fs::path write(const std::string& name, const json& j) const {
    const fs::path p = dir / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }
  json read(const fs::path& p) const { return json::parse(slurp(p)); }
  static std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }
  static json config(const std::string& name) {
    json j = json::parse(std::ifstream(kConfigs / name));
    j["nn_weights"] = (kConfigs / j["nn_weights"].get<std::string>()).string();
    return j;
  }
};

}  // namespace

TEST_F(Cli, StableScalarIsCertified) {
  EXPECT_EQ(run("certify-nominal " + q(kConfigs / "scalar_stable.json") + " --out " + q(dir / "c.json")), 0) << err();
  const json c = read(dir / "c.json");
  EXPECT_EQ(c["status"], "optimal");
  EXPECT_TRUE(c["certified"].get<bool>());
  EXPECT_GT(c["validation"]["fraction"].get<double>(), 0.999);
  EXPECT_NE(err().find("CERTIFIED"), std::string::npos);
}

TEST_F(Cli, UnstableScalarIsInfeasible) {
  EXPECT_EQ(run("certify-nominal " + q(kConfigs / "scalar_unstable.json") + " --out " + q(dir / "c.json")), 2);
  const json c = read(dir / "c.json");
  EXPECT_EQ(c["status"], "infeasible");
  EXPECT_FALSE(c["certified"].get<bool>());
  EXPECT_TRUE(c["P"].empty() || c["status"] != "optimal");
}

TEST_F(Cli, MissingWeightsIsConfigError) {
  json j = config("scalar_stable.json");
  j["nn_weights"] = (dir / "nope.json").string();
  EXPECT_EQ(run("certify-nominal " + q(write("cfg.json", j))), 1);
  EXPECT_NE(err().find("nope.json"), std::string::npos);
}

TEST_F(Cli, UnknownKeyIsRejected) {
  json j = config("scalar_stable.json");
  j["delta"] = 0.1;
  EXPECT_EQ(run("certify-nominal " + q(write("cfg.json", j))), 1);
  EXPECT_NE(err().find("delta"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("certify-nominal " + q(dir / "missing.json")), 1);
  EXPECT_EQ(run("frobnicate"), 1);
}

TEST_F(Cli, RobustWithNonzeroEquilibriumFails) {
  json w = json::parse(std::ifstream(kConfigs / "weights/scalar_stable.json"));
  w["output"]["b"] = {0.5};
  json j = config("scalar_stable.json");
  j["nn_weights"] = write("w.json", w).string();
  j["equilibrium"] = "solve";
  j["iqc_blocks"] = json::array({{{"type", "activation_off_by_one"}}});
  EXPECT_EQ(run("certify-robust " + q(write("cfg.json", j))), 1);
  EXPECT_NE(err().find("origin"), std::string::npos);

  // the nominal path handles the shifted equilibrium
  j.erase("iqc_blocks");
  EXPECT_EQ(run("certify-nominal " + q(write("cfg2.json", j)) + " --out " + q(dir / "c.json")), 0) << err();
  const json c = read(dir / "c.json");
  EXPECT_GT(std::abs(c["x_star"][0].get<double>()), 0.1);
}

TEST_F(Cli, RobustWithoutBlocksMatchesNominal) {
  json j = config("scalar_stable.json");
  j["validation"]["enabled"] = false;
  const fs::path cfg = write("cfg.json", j);
  ASSERT_EQ(run("certify-nominal " + q(cfg) + " --out " + q(dir / "n.json")), 0) << err();
  ASSERT_EQ(run("certify-robust " + q(cfg) + " --out " + q(dir / "r.json")), 0) << err();
  const json n = read(dir / "n.json"), r = read(dir / "r.json");
  EXPECT_EQ(n["P"], r["P"]);
  EXPECT_EQ(n["objective"], r["objective"]);
}

TEST_F(Cli, NominalRejectsBlocks) {
  json j = config("scalar_stable.json");
  j["iqc_blocks"] = json::array({{{"type", "activation_off_by_one"}}});
  EXPECT_EQ(run("certify-nominal " + q(write("cfg.json", j))), 1);
}

TEST_F(Cli, ValidateRoundTripAndTampering) {
  const fs::path cfg = kConfigs / "double_integrator.json";
  // the stored config has relative weights; run from a copy with absolute paths
  const fs::path local = write("cfg.json", config("double_integrator.json"));
  ASSERT_EQ(run("certify-nominal " + q(local) + " --out " + q(dir / "c.json")), 0) << err();
  EXPECT_EQ(run("validate " + q(local) + " " + q(dir / "c.json") + " --out " + q(dir / "v.json")), 0) << err();
  EXPECT_TRUE(read(dir / "v.json")["pass"].get<bool>());

  json c = read(dir / "c.json");
  c["P"][0][1] = c["P"][0][1].get<double>() + 0.1;
  c["P"][1][0] = c["P"][1][0].get<double>() + 0.1;
  EXPECT_EQ(run("validate " + q(local) + " " + q(write("bad.json", c))), 2);
  EXPECT_NE(err().find("failed check: "), std::string::npos);

  // same certificate, different config
  EXPECT_EQ(run("validate " + q(kConfigs / "pendulum_linearized.json") + " " + q(dir / "c.json")), 1);
  EXPECT_NE(err().find("hash"), std::string::npos);
  (void)cfg;
}

TEST_F(Cli, DeterministicOutputExceptTiming) {
  const fs::path cfg = kConfigs / "scalar_stable.json";
  ASSERT_EQ(run("certify-nominal " + q(cfg) + " --out " + q(dir / "a.json")), 0);
  ASSERT_EQ(run("certify-nominal " + q(cfg) + " --out " + q(dir / "b.json")), 0);
  EXPECT_EQ(strip_timing(read(dir / "a.json")), strip_timing(read(dir / "b.json")));
}

TEST_F(Cli, SimulateAndEllipseCsv) {
  const fs::path cfg = kConfigs / "double_integrator.json";
  ASSERT_EQ(run("simulate " + q(cfg) + " --x0 0.1,0 --steps 50 --out " + q(dir / "t.csv")), 0) << err();
  std::istringstream t(slurp(dir / "t.csv"));
  std::string line;
  std::getline(t, line);
  EXPECT_EQ(line, "k,x0,x1,u0,V");
  int rows = 0;
  while (std::getline(t, line)) ++rows;
  EXPECT_EQ(rows, 51);
  EXPECT_EQ(run("simulate " + q(cfg) + " --x0 0.1 --steps 5"), 1);

  ASSERT_EQ(run("certify-nominal " + q(cfg) + " --ellipse-slice 0,1 --ellipse-out " + q(dir / "e.csv") + " --out " +
                q(dir / "c.json")),
            0);
  const json c = read(dir / "c.json");
  MatrixXd P(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) P(i, j) = c["P_x"][i][j].get<double>();
  std::istringstream e(slurp(dir / "e.csv"));
  std::getline(e, line);
  EXPECT_EQ(line, "x0,x1");
  int pts = 0;
  while (std::getline(e, line)) {
    double a = 0, b = 0;
    char comma = 0;
    std::istringstream(line) >> a >> comma >> b;
    EXPECT_NEAR(P(0, 0) * a * a + 2 * P(0, 1) * a * b + P(1, 1) * b * b, 1.0, 1e-9);
    ++pts;
  }
  EXPECT_GT(pts, 100);
}

TEST_F(Cli, SweepOutputs) {
  ASSERT_EQ(run("sweep " + q(kConfigs / "scalar_unstable.json") + " --out " + q(dir / "s.csv")), 2);
  std::istringstream s(slurp(dir / "s.csv"));
  std::string line;
  std::getline(s, line);
  int rows = 0;
  while (std::getline(s, line)) {
    EXPECT_NE(line.find("infeasible"), std::string::npos) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 3);

  json j = config("scalar_stable.json");
  j["sweep"] = json::array({0.1});
  ASSERT_EQ(run("sweep " + q(write("cfg.json", j)) + " --out " + q(dir / "one.csv")), 0) << err();
  std::istringstream o(slurp(dir / "one.csv"));
  std::getline(o, line);
  EXPECT_EQ(line.rfind("delta_v", 0), 0u);
  rows = 0;
  while (std::getline(o, line)) ++rows;
  EXPECT_EQ(rows, 1);
}

TEST(Config, ParseAndHash) {
  const ScenarioConfig a = load_config((kConfigs / "vehicle_sector.json").string());
  EXPECT_EQ(a.sweep.size(), 13u);
  EXPECT_NEAR(a.sweep.front(), 0.6, 1e-15);
  EXPECT_NEAR(a.sweep.back(), 3.0, 1e-15);
  json j = json::parse(std::ifstream(kConfigs / "scalar_stable.json"));
  const std::string h = config_hash(parse_config(j, kConfigs));
  // solver backend and validation settings do not change the hash
  json k = j;
  k["solver"] = {{"backend", "scs"}};
  k["validation"]["samples"] = 5;
  EXPECT_EQ(config_hash(parse_config(k, kConfigs)), h);
  k["delta_v"] = 0.2;
  EXPECT_NE(config_hash(parse_config(k, kConfigs)), h);

  json bad = j;
  bad["sweep"] = {{"start", 0.1}, {"stop", 1.0}};
  EXPECT_THROW(parse_config(bad, kConfigs), ConfigError);
  bad = j;
  bad["sweep"] = json::array({0.1, -1.0});
  EXPECT_THROW(parse_config(bad, kConfigs), ConfigError);
  bad = j;
  bad["validation"]["interior_fraction"] = 1.5;
  EXPECT_THROW(parse_config(bad, kConfigs), ConfigError);
  bad = j;
  bad["solver"] = {{"max_iters", 0}};
  EXPECT_THROW(parse_config(bad, kConfigs), ConfigError);
  bad = j;
  bad.erase("delta_v");
  bad.erase("sweep");
  EXPECT_THROW(parse_config(bad, kConfigs), ConfigError);
}
