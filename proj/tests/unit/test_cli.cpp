// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "gdiff/mlp_score.hpp"
#include "gdiff/rng.hpp"
#include "helpers.hpp"

namespace {

struct CliResult {
  int code = -1;
  std::string err;
};

CliResult run_cli(const testing::ScratchDir& dir, const std::string& args) {
  const auto err_path = dir / "stderr.txt";
  const std::string cmd = std::string("GD_LOG=quiet '") + GDIFF_CLI_PATH + "' " + args + " > /dev/null 2> '" +
                          err_path.string() + "'";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = testing::read_bytes(err_path);
  return r;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

// Everything except the wall-clock column.
std::vector<std::vector<std::string>> without_seconds(std::vector<std::vector<std::string>> rows) {
  for (auto& r : rows) {
    if (r.size() > 8) r.erase(r.begin() + 8);
  }
  return rows;
}

// Small analytic-prior problem on 4x4 images so every solve takes milliseconds.
void write_setup(const testing::ScratchDir& dir, const std::string& extra = "") {
  REQUIRE(run_cli(dir, "make-dataset --count 3 --size 4 --seed 8 --out '" + (dir / "data").string() + "'").code == 0);
  testing::write_bytes(dir / "run.cfg",
                       "task = denoise\n"
                       "schedule.T = 40\n"
                       "schedule.beta_end = 0.3\n"
                       "model.kind = gmm\n"
                       "model.gmm.weights = 0.5, 0.5\n"
                       "model.gmm.means = " +
                           std::string("0.2,0.2,0.2,0.2,0.2,0.2,0.2,0.2,0.2,0.2,0.2,0.2,0.2,0.2,0.2,0.2; ") +
                           "0.8,0.8,0.8,0.8,0.8,0.8,0.8,0.8,0.8,0.8,0.8,0.8,0.8,0.8,0.8,0.8\n"
                           "model.gmm.variances = 0.05, 0.05\n"
                           "data.truth = data\n"
                           "operator.sigma_y = 0.2\n"
                           "guidance.q2 = zeta\n"
                           "guidance.eta = 0.01\n"
                           "run.seed = 4\n"
                           "run.chains = 2\n" +
                           extra);
}

std::string cfg(const testing::ScratchDir& dir) { return "--config '" + (dir / "run.cfg").string() + "'"; }
std::string out(const testing::ScratchDir& dir, const std::string& name) {
  return "--out '" + (dir / name).string() + "'";
}

}  // namespace

TEST_CASE("cli usage errors exit 1") {
  testing::ScratchDir dir("cli_usage");
  CHECK(run_cli(dir, "").code == 1);
  CHECK(run_cli(dir, "frobnicate").code == 1);
  CHECK(run_cli(dir, "--help").code == 0);
  CHECK(run_cli(dir, "solve --config '" + (dir / "absent.cfg").string() + "'").code == 1);
  CHECK(run_cli(dir, "solve").code == 1);
}

TEST_CASE("solve writes reconstructions and a report") {
  testing::ScratchDir dir("cli_solve");
  write_setup(dir);
  const CliResult r = run_cli(dir, "solve " + cfg(dir) + " " + out(dir, "o1"));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto rows = read_csv(dir / "o1" / "report.csv");
  REQUIRE(rows.size() == 1 + 6 + 1 + 1);
  CHECK(rows[0] == std::vector<std::string>{"run_id", "task", "q1", "q2", "eta", "seed", "psnr_db", "mse", "seconds", "nfe"});
  CHECK(rows[1][0] == "item_00000/c0");
  CHECK(rows[1][3] == "zeta");
  CHECK(rows[1][9] == "40");
  CHECK(rows[7][0] == "measurement");
  CHECK(rows[8][0] == "mean");
  CHECK(std::filesystem::exists(dir / "o1" / "recon" / "item_00002_c1.gdt"));
  CHECK(std::filesystem::exists(dir / "o1" / "measurement" / "item_00000.gdt"));
}

TEST_CASE("solve is reproducible for a fixed seed") {
  testing::ScratchDir dir("cli_determinism");
  write_setup(dir, "run.store_trajectory = true\n");
  REQUIRE(run_cli(dir, "solve " + cfg(dir) + " " + out(dir, "a")).code == 0);
  REQUIRE(run_cli(dir, "solve " + cfg(dir) + " " + out(dir, "b") + " --jobs 2").code == 0);
  REQUIRE(run_cli(dir, "solve " + cfg(dir) + " " + out(dir, "c") + " --seed 5").code == 0);
  CHECK(without_seconds(read_csv(dir / "a" / "report.csv")) == without_seconds(read_csv(dir / "b" / "report.csv")));
  CHECK(testing::read_bytes(dir / "a" / "recon" / "item_00001_c1.gdt") ==
        testing::read_bytes(dir / "b" / "recon" / "item_00001_c1.gdt"));
  CHECK(testing::read_bytes(dir / "a" / "recon" / "item_00001_c1.gdt") !=
        testing::read_bytes(dir / "c" / "recon" / "item_00001_c1.gdt"));
}

TEST_CASE("config and runtime errors map to exit codes") {
  testing::ScratchDir dir("cli_errors");
  write_setup(dir);
  CHECK(run_cli(dir, "solve " + cfg(dir) + " --set guidance.eta=-1").code == 1);
  CHECK(run_cli(dir, "solve " + cfg(dir) + " --set no.such.key=1").code == 1);
  const CliResult pattern =
      run_cli(dir, "solve " + cfg(dir) + " --set task=inpaint_pattern --set operator.pattern=holes.pgm");
  CHECK(pattern.code == 1);
  CHECK(pattern.err.find("holes.pgm") != std::string::npos);

  testing::write_bytes(dir / "data" / "item_00000.gdt", "garbage");
  CHECK(run_cli(dir, "solve " + cfg(dir) + " " + out(dir, "bad")).code == 2);
}

TEST_CASE("divergence exits 2") {
  testing::ScratchDir dir("cli_diverge");
  write_setup(dir, "guidance.estimator = tweedie\n");
  CHECK(run_cli(dir, "solve " + cfg(dir) + " " + out(dir, "o") + " --set guidance.eta=1e300").code == 2);
}

TEST_CASE("sweep rows, failures and agreement with solve") {
  testing::ScratchDir dir("cli_sweep");
  write_setup(dir);
  CliResult r = run_cli(dir, "sweep " + cfg(dir) + " " + out(dir, "s") + " --param eta --values 0,0.005,0.01,0.02,0.04");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto rows = read_csv(dir / "s" / "sweep.csv");
  REQUIRE(rows.size() == 6);
  CHECK(rows[1][0] == "eta=0");
  CHECK(rows[5][0] == "eta=0.04");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK_FALSE(rows[i][6].empty());

  r = run_cli(dir, "sweep " + cfg(dir) + " " + out(dir, "f") + " --param eta --values 0.01,-1");
  CHECK(r.code == 0);
  const auto failed = read_csv(dir / "f" / "sweep.csv");
  REQUIRE(failed.size() == 3);
  CHECK(failed[2][0] == "eta=-1:failed");
  CHECK(failed[2][6].empty());

  CHECK(run_cli(dir, "sweep " + cfg(dir) + " " + out(dir, "g") + " --param eta --values -1,-2").code == 2);

  REQUIRE(run_cli(dir, "sweep " + cfg(dir) + " " + out(dir, "one") + " --param eta --values 0.01").code == 0);
  REQUIRE(run_cli(dir, "solve " + cfg(dir) + " " + out(dir, "solo")).code == 0);
  const auto one = read_csv(dir / "one" / "sweep.csv");
  const auto solo = read_csv(dir / "solo" / "report.csv");
  CHECK(one[1][6] == solo.back()[6]);
  CHECK(one[1][7] == solo.back()[7]);
}

TEST_CASE("train with zero steps stores the initial network") {
  testing::ScratchDir dir("cli_train");
  REQUIRE(run_cli(dir, "make-dataset --count 4 --size 4 --seed 1 --out '" + (dir / "data").string() + "'").code == 0);
  testing::write_bytes(dir / "run.cfg",
                       "train.dataset = data\ntrain.hidden = 8, 8\ntrain.steps = 0\ntrain.seed = 12\n"
                       "train.output_gain = 0.1\ntrain.time_features = 4\n");
  REQUIRE(run_cli(dir, "train " + cfg(dir) + " " + out(dir, "t")).code == 0);

  gdiff::MlpScoreNet net(16, {8, 8}, 4);
  gdiff::SeededGenerator init(12, 2);
  net.initialize(init, 0.1);
  gdiff::save_weights(net, dir / "expected.gdw");
  CHECK(testing::read_bytes(dir / "t" / "weights.gdw") == testing::read_bytes(dir / "expected.gdw"));
  CHECK(testing::read_bytes(dir / "t" / "loss.csv") == "step,loss\n");
}

TEST_CASE("oracle-check passes and detects an injected fault") {
  testing::ScratchDir dir("cli_oracle");
  CHECK(run_cli(dir, "oracle-check").code == 0);
  CHECK(run_cli(dir, "oracle-check --inject-fault mlp_vjp").code == 2);
  CHECK(run_cli(dir, "oracle-check --inject-fault nonsense").code == 1);
}
