#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "unbiased_mcmc/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kTmp = fs::temp_directory_path() / ("umcmc_cli_" + std::to_string(::getpid()));

int run(const std::string& args) {
  const std::string cmd = std::string(COUPLED_MCMC_BIN) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kTmp);
  const fs::path p = kTmp / name;
  std::ofstream(p) << text;
  return p;
}

class Cli : public ::testing::Test {
 protected:
  void TearDown() override { fs::remove_all(kTmp); }
};

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  const auto cfg = write_config("p.json", "{}");
  EXPECT_EQ(run("pump --config " + cfg.string()), 2);                      // --out missing
  EXPECT_EQ(run("pump --config " + cfg.string() + " --out x --seed -1"), 2);
  EXPECT_EQ(run("pump --config " + cfg.string() + " --out x --kernel a"), 2);  // not a pump flag
}

TEST_F(Cli, ConfigErrorsExitWithOneAndWriteNothing) {
  const auto bad = write_config("bad.json", R"({"R": 5, "unknown": 1})");
  const fs::path out = kTmp / "out_bad";
  EXPECT_EQ(run("pump --config " + bad.string() + " --out " + out.string()), 1);
  EXPECT_FALSE(fs::exists(out));
  const auto broken = write_config("broken.json", "{\"R\": ");
  EXPECT_EQ(run("pump --config " + broken.string() + " --out " + out.string()), 1);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, MissingDataFileExitsWithOne) {
  const auto cfg = write_config("d.json", R"({"data": "no_such.csv"})");
  const fs::path out = kTmp / "out_d";
  EXPECT_EQ(run("pump --config " + cfg.string() + " --out " + out.string()), 1);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, RunsAreReproducibleAcrossThreadCounts) {
  const auto cfg = write_config("m.json", R"({"kernel": "mixture", "R": 200})");
  const fs::path a = kTmp / "a";
  const fs::path b = kTmp / "b";
  ASSERT_EQ(run("meet --config " + cfg.string() + " --seed 9 --threads 1 --out " + a.string()), 0);
  ASSERT_EQ(run("meet --config " + cfg.string() + " --seed 9 --threads 3 --out " + b.string()), 0);
  for (const char* f : {"taus.csv", "km.json", "tv_bound.csv", "survival.csv"}) {
    EXPECT_EQ(umcmc::io::read_file(a / f), umcmc::io::read_file(b / f)) << f;
  }
  const auto ma = nlohmann::json::parse(umcmc::io::read_file(a / "manifest.json"));
  const auto mb = nlohmann::json::parse(umcmc::io::read_file(b / "manifest.json"));
  EXPECT_EQ(ma.at("seed"), 9);
  EXPECT_EQ(ma.at("config_hash"), mb.at("config_hash"));
  EXPECT_EQ(ma.at("config").at("mixture").at("sigma_q"), 3.0);
}

TEST_F(Cli, ReplicatesFlagOverridesConfig) {
  const auto cfg = write_config("r.json", R"({"kernel": "pump", "R": 500})");
  const fs::path out = kTmp / "r";
  ASSERT_EQ(run("meet --config " + cfg.string() + " --R 17 --out " + out.string()), 0);
  const auto m = nlohmann::json::parse(umcmc::io::read_file(out / "manifest.json"));
  EXPECT_EQ(m.at("config").at("R"), 17);
}

TEST_F(Cli, ShippedConfigsParse) {
  // R = 2 keeps each run short; only the experiments with small fixed costs run.
  const fs::path out = kTmp / "shipped";
  const std::string dir = UMCMC_CONFIG_DIR;
  EXPECT_EQ(run("meet --config " + dir + "/meet_pump.json --R 5 --out " + out.string()), 0);
  EXPECT_EQ(run("meet --config " + dir + "/meet_cut.json --R 5 --out " + out.string()), 0);
  EXPECT_EQ(run("scaling --config " + dir + "/scaling.json --R 2 --kernel gibbs-5 --out " + out.string()), 0);
}

}  // namespace
