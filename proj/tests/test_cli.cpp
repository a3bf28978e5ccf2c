#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "latentdir/cli.hpp"
#include "latentdir/errors.hpp"

using namespace latentdir;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "latentdir");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("latentdir_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("LD_SEED");
    unsetenv("LD_FAULT");
  }
  void TearDown() override {
    fs::remove_all(dir_);
    unsetenv("LD_SEED");
    unsetenv("LD_FAULT");
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, DefaultPresetClampsComponentsToLatentRank) {
  const CliRun r = run({"discover", "-o", path("")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("using K=8"), std::string::npos);
  const auto doc = nlohmann::json::parse(slurp(path("basis.json")));
  EXPECT_EQ(doc["K"], 8);
  EXPECT_EQ(doc["method"], "pca");
  EXPECT_EQ(doc["space"], "latent");
}

TEST_F(CliTest, IcaOnFactorPrior) {
  const CliRun r = run({"discover", "--method", "ica", "--components", "20", "--prior", "factors",
                     "-o", path("")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("converged after"), std::string::npos);
  const auto doc = nlohmann::json::parse(slurp(path("basis.json")));
  EXPECT_EQ(doc["K"], 8);
  EXPECT_EQ(doc["method"], "ica");
}

TEST_F(CliTest, InvalidCombinationWritesNothing) {
  const CliRun r = run({"discover", "--method", "ica", "--space", "latent", "-o", path("")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("invalid space/method combination"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("basis.json")));
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"discover", "--no-such-flag"}).code, kExitUsage);
  EXPECT_EQ(run({"discover", "--preset", "nope", "-o", path("")}).code, kExitUsage);
  EXPECT_EQ(run({"discover", "--alpha", "3:-3", "-o", path("")}).code, kExitUsage);
}

TEST_F(CliTest, ApplyWritesStripAndSidecar) {
  ASSERT_EQ(run({"discover", "-o", path("")}).code, kExitOk);
  const CliRun one = run({"apply", "--basis", path("basis.json"), "--steps", "1", "--out",
                       path("single")});
  ASSERT_EQ(one.code, kExitOk) << one.err;
  auto meta = nlohmann::json::parse(slurp(path("single.json")));
  EXPECT_EQ(meta["tiles"], 1);
  EXPECT_EQ(meta["alphas"].size(), 1u);

  const CliRun seven = run({"apply", "--basis", path("basis.json"), "--index", "2", "--out",
                         path("seven")});
  ASSERT_EQ(seven.code, kExitOk) << seven.err;
  meta = nlohmann::json::parse(slurp(path("seven.json")));
  EXPECT_EQ(meta["tiles"], 7);
  EXPECT_EQ(meta["direction_index"], 2);
  EXPECT_DOUBLE_EQ(meta["alphas"][0].get<double>(), -3.0);
  EXPECT_DOUBLE_EQ(meta["alphas"][3].get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(meta["alphas"][6].get<double>(), 3.0);
  EXPECT_EQ(meta["tile_side"], 16);
  const std::string pgm = slurp(path("seven.pgm"));
  EXPECT_EQ(pgm.rfind("P5\n112 16\n255\n", 0), 0u);
  EXPECT_EQ(pgm.size(), std::string("P5\n112 16\n255\n").size() + 112u * 16u);
}

TEST_F(CliTest, ApplyIsBitwiseReproducible) {
  ASSERT_EQ(run({"discover", "-o", path("")}).code, kExitOk);
  ASSERT_EQ(run({"apply", "--basis", path("basis.json"), "--out", path("a")}).code, kExitOk);
  ASSERT_EQ(run({"apply", "--basis", path("basis.json"), "--out", path("b")}).code, kExitOk);
  EXPECT_EQ(slurp(path("a.pgm")), slurp(path("b.pgm")));
}

TEST_F(CliTest, ApplyRejectsBadIndexAndMissingBasis) {
  ASSERT_EQ(run({"discover", "-o", path("")}).code, kExitOk);
  const CliRun bad = run({"apply", "--basis", path("basis.json"), "--index", "8", "--out",
                       path("x")});
  EXPECT_EQ(bad.code, kExitUsage);
  EXPECT_NE(bad.err.find("out of range"), std::string::npos);
  EXPECT_EQ(run({"apply", "--basis", path("missing.json")}).code, kExitUsage);
  EXPECT_EQ(run({"evaluate", "--basis", path("missing.json")}).code, kExitUsage);
}

TEST_F(CliTest, EvaluateReportRowsAndLabels) {
  ASSERT_EQ(run({"discover", "-o", path("")}).code, kExitOk);
  const CliRun r = run({"evaluate", "--basis", path("basis.json"), "--alpha", "0:0", "--alpha",
                     "-3:3", "--alpha", "-6:6", "-o", path("")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("U[-3,3]"), std::string::npos);
  EXPECT_NE(r.out.find("U[-6,6]"), std::string::npos);
  EXPECT_NE(r.out.find("[0,0]"), std::string::npos);

  const auto report = nlohmann::json::parse(slurp(path("report.json")));
  const auto& rows = report["rows"];
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows[0]["fid"].get<double>(), 0.0, 1e-6);
  EXPECT_LT(rows[0]["fid"].get<double>(), rows[1]["fid"].get<double>());
  EXPECT_LT(rows[1]["fid"].get<double>(), rows[2]["fid"].get<double>());
  EXPECT_EQ(rows[1]["N"], 1000);
  EXPECT_EQ(rows[1]["K"], 8);
  EXPECT_EQ(rows[1]["embed_id"], "randproj-tanh-256x32-seed7");
}

TEST_F(CliTest, EvaluateTwiceGivesIdenticalReports) {
  ASSERT_EQ(run({"discover", "-o", path("")}).code, kExitOk);
  ASSERT_EQ(run({"evaluate", "--basis", path("basis.json"), "--report", path("r1.json")}).code,
            kExitOk);
  ASSERT_EQ(run({"evaluate", "--basis", path("basis.json"), "--report", path("r2.json")}).code,
            kExitOk);
  EXPECT_EQ(slurp(path("r1.json")), slurp(path("r2.json")));
}

TEST_F(CliTest, RefusesToOverwriteWithoutForce) {
  ASSERT_EQ(run({"discover", "-o", path("")}).code, kExitOk);
  const std::string before = slurp(path("basis.json"));
  const CliRun again = run({"discover", "--seed", "5", "-o", path("")});
  EXPECT_EQ(again.code, kExitUsage);
  EXPECT_NE(again.err.find("--force"), std::string::npos);
  EXPECT_EQ(slurp(path("basis.json")), before);
  EXPECT_EQ(run({"discover", "--seed", "5", "--force", "-o", path("")}).code, kExitOk);
  EXPECT_NE(slurp(path("basis.json")), before);
}

TEST_F(CliTest, SeedPrecedence) {
  setenv("LD_SEED", "42", 1);
  ASSERT_EQ(run({"discover", "--basis", path("env.json")}).code, kExitOk);
  EXPECT_EQ(nlohmann::json::parse(slurp(path("env.json")))["seed"], 42);
  ASSERT_EQ(run({"discover", "--seed", "3", "--basis", path("flag.json")}).code, kExitOk);
  EXPECT_EQ(nlohmann::json::parse(slurp(path("flag.json")))["seed"], 3);
  setenv("LD_SEED", "abc", 1);
  EXPECT_EQ(run({"discover", "--basis", path("bad.json")}).code, kExitUsage);
}

TEST_F(CliTest, ConfigFileIsStrict) {
  {
    std::ofstream f(path("cfg.json"));
    f << R"({"preset": "paper-ica-20", "samples": 3000, "seed": 9})";
  }
  ASSERT_EQ(run({"discover", "--config", path("cfg.json"), "-o", path("")}).code, kExitOk);
  const auto doc = nlohmann::json::parse(slurp(path("basis.json")));
  EXPECT_EQ(doc["method"], "ica");
  EXPECT_EQ(doc["N"], 3000);
  EXPECT_EQ(doc["seed"], 9);
  {
    std::ofstream f(path("bad.json"));
    f << R"({"samples": 3000, "colour": "blue"})";
  }
  EXPECT_EQ(run({"discover", "--config", path("bad.json"), "--basis", path("b.json")}).code,
            kExitUsage);
}

TEST_F(CliTest, ConfigRoundTripsThroughJson) {
  ExperimentConfig c = preset_config("paper-ica-500-feature");
  c.seed = 12;
  c.alpha_rows = {{-1.0, 2.0}};
  ExperimentConfig back;
  apply_config_json(back, config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(preset_names().size(), 5u);
  for (const auto& name : preset_names()) EXPECT_NO_THROW(preset_config(name).validate());
}

TEST_F(CliTest, AlphaLabels) {
  EXPECT_EQ(format_alpha_label({-3, 3}), "U[-3,3]");
  EXPECT_EQ(format_alpha_label({-6, 6}), "U[-6,6]");
  EXPECT_EQ(format_alpha_label({0, 0}), "[0,0]");
}

TEST_F(CliTest, VerifyPassesAndReportsJson) {
  const CliRun r = run({"verify"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  const CliRun j = run({"verify", "--json"});
  ASSERT_EQ(j.code, kExitOk);
  const auto doc = nlohmann::json::parse(j.out);
  EXPECT_TRUE(doc["passed"].get<bool>());
  EXPECT_EQ(doc["checks"][0]["name"], "fid_closed_form_identical");
}

TEST_F(CliTest, VerifyNamesFirstFailureUnderFault) {
  setenv("LD_FAULT", "spd_sqrt_sign", 1);
  const CliRun r = run({"verify"});
  EXPECT_EQ(r.code, kExitVerifyFailed);
  EXPECT_NE(r.err.find("fid_closed_form"), std::string::npos);
}
