/*
 * Copyright (c) 2026, The corrfilt Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "corrfilt/corrfilt.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace corrfilt;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("corrfilt_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(CORRFILT_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path panel(const fs::path& dir, std::size_t t = 120) {
  const fs::path p = dir / "panel.csv";
  std::ofstream(p) << data_csv(simulate_gaussian(fixtures::block_model(3, 4, 0.6, 0.15), t, 5));
  return p;
}

}  // namespace

TEST(Cli, ClusterFixtureMatchesPrintedMatrix) {
  const fs::path dir = scratch("cluster");
  const std::string in = fixtures::data_path("ten_stocks_correlation.csv");
  ASSERT_EQ(run("cluster -i " + in + " --correlation -m alca -o " + dir.string()), 0);
  const CorrelationMatrix c = read_correlation_csv((dir / "filtered_alca.csv").string());
  EXPECT_LE(fixtures::max_abs_diff(c.values(), fixtures::ten_stocks_alca()), fixtures::kAveragedPrintTolerance);
  EXPECT_TRUE(fs::exists(dir / "tree_alca.nwk"));
  const Json manifest = Json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["command"], "cluster");
  EXPECT_EQ(manifest["artifacts"].size(), 3u);
}

TEST(Cli, PmfgGraphJson) {
  const fs::path dir = scratch("pmfg");
  ASSERT_EQ(run("network -k pmfg --correlation -i " + fixtures::data_path("ten_stocks_correlation.csv") + " -o " + dir.string()), 0);
  const Json g = Json::parse(slurp(dir / "graph_pmfg.json"));
  EXPECT_EQ(g["edges"].size(), 24u);
}

TEST(Cli, EvaluateWithShrinkageGrid) {
  const fs::path dir = scratch("evaluate");
  const fs::path in = panel(dir);
  ASSERT_EQ(run("evaluate -i " + in.string() + " -f slca,alca,rmt,shrink -a 0:1:0.05 -r 8 --kl-mode gaussian -o " +
                (dir / "a").string()),
            0);
  const Json report = Json::parse(slurp(dir / "a" / "report.json"));
  EXPECT_EQ(report["points"].size(), 24u);
  EXPECT_EQ(report["alpha_curve"].size(), 21u);
  EXPECT_FALSE(report["alpha_k"].is_null());
  EXPECT_EQ(report["reference"]["source"], "wishart");
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const fs::path dir = scratch("determinism");
  const fs::path in = panel(dir);
  const std::string args = "-i " + in.string() + " --seed 11 ";
  for (const char* sub : {"a", "b"}) {
    const std::string out = " -o " + (dir / sub).string();
    ASSERT_EQ(run(args + "evaluate -f slca,rmt,shrink -a 0,0.5,1 -r 6 --kl-mode gaussian" + out), 0);
    ASSERT_EQ(run(args + "bootstrap -r 20" + out), 0);
    ASSERT_EQ(run(args + "hnfm" + out), 0);
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / name)) << name;
    ++compared;
  }
  EXPECT_GE(compared, 7u);
}

TEST(Cli, SimulateFromModel) {
  const fs::path dir = scratch("simulate");
  ASSERT_EQ(run("hnfm --correlation -i " + fixtures::data_path("ten_stocks_correlation.csv") + " -o " + dir.string()), 0);
  ASSERT_EQ(run("simulate --model " + (dir / "hnfm.json").string() + " -t 50 --student --mu 6 -o " + dir.string()), 0);
  const DataMatrix d = read_data_csv((dir / "simulated.csv").string());
  EXPECT_EQ(d.records(), 50u);
  EXPECT_EQ(d.labels(), fixtures::ten_stock_labels());
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("errors");
  const std::string out = " -o " + dir.string();
  EXPECT_EQ(run("correlate -i " + (dir / "missing.csv").string() + out), 2);
  std::ofstream(dir / "ragged.csv") << "a,b\n1,2\n3\n";
  EXPECT_EQ(run("correlate -i " + (dir / "ragged.csv").string() + out), 2);
  std::ofstream(dir / "flat.csv") << "a,b\n1,2\n2,2\n3,2\n";
  EXPECT_EQ(run("correlate -i " + (dir / "flat.csv").string() + out), 2);
  EXPECT_EQ(run("cluster -m bogus --correlation -i " + fixtures::data_path("ten_stocks_correlation.csv") + out), 4);
  EXPECT_EQ(run("nosuchcommand"), 4);
  // Fewer records than elements: the sample matrices are singular.
  EXPECT_EQ(run("evaluate -i " + panel(dir, 8).string() + " -f rmt -r 3" + out), 3);
  EXPECT_EQ(run("evaluate -i " + panel(dir).string() + " -f shrink -a 0:2:0.5" + out), 4);
}
