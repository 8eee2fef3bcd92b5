// Copyright 2026 The totalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "totalign/commands.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

namespace totalign::cli {
namespace {

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("totalign_cmd_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunManifest ManifestFor(const fs::path& data, const fs::path& out) {
  RunManifest m;
  m.acoustic = data / kAcousticFile;
  m.linguistic = data / kLinguisticFile;
  m.labels = data / kLabelsFile;
  m.weights = data / kWeightsFile;
  m.output_dir = out;
  return m;
}

nlohmann::json ReadJson(const fs::path& p) { return nlohmann::json::parse(io::ReadText(p)); }

int RunCli(const std::string& args) {
  const std::string cmd = std::string(TOT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

TEST(SynthCommandTest, SameSeedSameFiles) {
  const fs::path a = TempDir("synth_a");
  const fs::path b = TempDir("synth_b");
  const SynthOptions opt{.length_a = 20, .length_t = 8, .dim = 5, .seed = 99, .warp = true};
  RunSynth(opt, a);
  RunSynth(opt, b);
  for (const char* f : {kAcousticFile, kLinguisticFile, kLabelsFile, kWeightsFile, kAlignmentFile}) {
    EXPECT_EQ(io::ReadText(a / f), io::ReadText(b / f)) << f;
  }
  SynthOptions other = opt;
  other.seed = 100;
  RunSynth(other, b);
  EXPECT_NE(io::ReadText(a / kLinguisticFile), io::ReadText(b / kLinguisticFile));
}

TEST(SynthCommandTest, NoWarpNoNoiseGivesIdenticalSequencesAndDiagonalCoupling) {
  const fs::path data = TempDir("synth_same");
  RunSynth({.length_a = 10, .length_t = 10, .dim = 6, .seed = 3, .warp = false, .noise = 0.0}, data);
  EXPECT_EQ(io::ReadText(data / kAcousticFile), io::ReadText(data / kLinguisticFile));
  RunManifest m = ManifestFor(data, data / "run");
  m.epsilon = 0.01;
  ASSERT_EQ(RunCoupling(m), kOk);
  const Matrix g = io::ParseCouplingCsv(io::ReadText(data / "run" / kCouplingFile));
  EXPECT_GT(g.diagonal().sum(), 0.99);
}

TEST(SynthCommandTest, RejectsUnequalLengthsWithoutWarp) {
  EXPECT_THROW(RunSynth({.length_a = 10, .length_t = 5, .dim = 3, .seed = 1, .warp = false},
                        TempDir("synth_bad")),
               InvalidArgument);
  EXPECT_THROW(Synthesize({.length_a = 0, .length_t = 5, .dim = 3}), InvalidArgument);
}

TEST(SynthCommandTest, DoubleLengthWarpRecoversGroundTruth) {
  const SynthPair pair = Synthesize({.length_a = 24, .length_t = 12, .dim = 16, .seed = 8,
                                     .warp = true, .noise = 0.1});
  for (Index j = 0; j < 12; ++j) {
    EXPECT_EQ(pair.correspondence[static_cast<std::size_t>(2 * j)], j);
    EXPECT_EQ(pair.correspondence[static_cast<std::size_t>(2 * j + 1)], j);
  }
  SinkhornConfig cfg;
  cfg.epsilon = 0.05;
  const SinkhornResult r = TotCoupling(pair.acoustic, pair.linguistic, 0.5, cfg);
  double mass = 0.0;
  for (Index i = 0; i < 24; ++i) mass += r.coupling(i, pair.correspondence[static_cast<std::size_t>(i)]);
  EXPECT_GT(mass, 0.8);
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = TempDir("pipeline");
    RunSynth({.length_a = 30, .length_t = 12, .dim = 8, .seed = 21, .warp = true, .noise = 0.5}, data_);
  }
  fs::path data_;
};

TEST_F(PipelineTest, CouplingOutputsAndStats) {
  RunManifest m = ManifestFor(data_, data_ / "run");
  ASSERT_EQ(RunCoupling(m), kOk);
  const Matrix g = io::ParseCouplingCsv(io::ReadText(data_ / "run" / kCouplingFile));
  ASSERT_EQ(g.rows(), 30);
  ASSERT_EQ(g.cols(), 12);
  const auto coupling = CouplingMatrix(g, MarginalWeights::Uniform(30), MarginalWeights::Uniform(12));
  EXPECT_LT(coupling.MarginalViolation(), 1e-9);
  const auto stats = ReadJson(data_ / "run" / kCouplingStatsFile);
  EXPECT_EQ(stats["beta"], 0.5);
  EXPECT_EQ(stats["epsilon"], 0.5);
  EXPECT_TRUE(stats["converged"].get<bool>());
  EXPECT_NEAR(stats["entropy"].get<double>(), Entropy(g), 1e-12);
  EXPECT_NEAR(stats["temporal_spread"].get<double>(), TemporalSpread(g), 1e-12);
  for (const char* key : {"iterations", "marginal_violation", "transport_cost", "combined_cost",
                          "near_diagonal_mass"}) {
    EXPECT_TRUE(stats.contains(key)) << key;
  }
}

TEST_F(PipelineTest, TemporalPenaltyRaisesNearDiagonalMass) {
  RunManifest m = ManifestFor(data_, data_ / "beta0");
  m.beta = 0.0;
  RunCoupling(m);
  m.beta = 0.5;
  m.output_dir = data_ / "beta05";
  RunCoupling(m);
  const double plain = ReadJson(data_ / "beta0" / kCouplingStatsFile)["near_diagonal_mass"];
  const double ordered = ReadJson(data_ / "beta05" / kCouplingStatsFile)["near_diagonal_mass"];
  EXPECT_GT(ordered, plain);
}

TEST_F(PipelineTest, SingleFrameCouplingIsOne) {
  const fs::path dir = TempDir("one");
  io::WriteTextAtomic(dir / "a.txt", "1 3\n1 2 3\n");
  io::WriteTextAtomic(dir / "z.txt", "1 3\n-1 0 4\n");
  RunManifest m;
  m.acoustic = dir / "a.txt";
  m.linguistic = dir / "z.txt";
  m.output_dir = dir;
  ASSERT_EQ(RunCoupling(m), kOk);
  const Matrix g = io::ParseCouplingCsv(io::ReadText(dir / kCouplingFile));
  ASSERT_EQ(g.size(), 1);
  EXPECT_EQ(g(0, 0), 1.0);
}

TEST_F(PipelineTest, LossReportIsDeterministicAndConsistent) {
  RunManifest m = ManifestFor(data_, data_ / "loss");
  ASSERT_EQ(RunLoss(m), kOk);
  const std::string first = io::ReadText(data_ / "loss" / kLossReportFile);
  ASSERT_EQ(RunLoss(m), kOk);
  EXPECT_EQ(io::ReadText(data_ / "loss" / kLossReportFile), first);
  const auto j = nlohmann::json::parse(first);
  EXPECT_TRUE(j["ctc_feasible"].get<bool>());
  EXPECT_EQ(j["lambda"], 0.3);
  EXPECT_EQ(j["w"], 1.0);
  const double total = 0.3 * j["ctc"].get<double>() +
                       0.7 * (j["align"].get<double>() + j["tot"].get<double>());
  EXPECT_NEAR(j["total"].get<double>(), total, 1e-12);
}

TEST_F(PipelineTest, ZeroScaleMakesFusionParametersIrrelevant) {
  RunManifest m = ManifestFor(data_, data_ / "s0a");
  m.s = 0.0;
  RunLoss(m);
  AdapterWeights w = io::ReadAdapterWeights(data_ / kWeightsFile);
  w.fc3.weight *= -3.0;
  w.ln_fused.bias.setConstant(1.5);
  io::WriteAdapterWeights(data_ / "other_weights.json", w);
  m.weights = data_ / "other_weights.json";
  m.output_dir = data_ / "s0b";
  RunLoss(m);
  EXPECT_EQ(ReadJson(data_ / "s0a" / kLossReportFile)["total"],
            ReadJson(data_ / "s0b" / kLossReportFile)["total"]);
}

TEST_F(PipelineTest, InfeasibleCtcOmitsTotal) {
  std::string ids = "101";
  for (int k = 0; k < 40; ++k) ids += " 3";
  io::WriteTextAtomic(data_ / "long_labels.txt", ids + " 102\n");
  RunManifest m = ManifestFor(data_, data_ / "infeasible");
  m.labels = data_ / "long_labels.txt";
  ASSERT_EQ(RunLoss(m), kOk);
  const auto j = ReadJson(data_ / "infeasible" / kLossReportFile);
  EXPECT_FALSE(j["ctc_feasible"].get<bool>());
  EXPECT_FALSE(j.contains("total"));
  EXPECT_FALSE(j.contains("ctc"));
}

TEST_F(PipelineTest, HeatmapMatchesCouplingShape) {
  RunManifest m = ManifestFor(data_, data_ / "heat");
  RunCoupling(m);
  ASSERT_EQ(RunHeatmap(data_ / "heat" / kCouplingFile, data_ / "heat" / "map.pgm"), kOk);
  const std::string pgm = io::ReadText(data_ / "heat" / "map.pgm");
  EXPECT_EQ(pgm.rfind("P2\n12 30\n255\n", 0), 0u);
}

TEST_F(PipelineTest, ManifestResolvesRelativePathsAndPreset) {
  io::WriteTextAtomic(data_ / "run.json", R"({
    "acoustic": "acoustic.txt", "linguistic": "linguistic.txt",
    "labels": "labels.txt", "weights": "weights.json",
    "output_dir": "from_manifest", "preset": "test-best", "beta": 0.25
  })");
  const RunManifest m = RunManifest::Load(data_ / "run.json");
  EXPECT_EQ(m.acoustic, data_ / "acoustic.txt");
  EXPECT_EQ(m.epsilon, 0.01);
  EXPECT_EQ(*m.s, 0.1);
  EXPECT_EQ(m.beta, 0.25);
  EXPECT_NO_THROW(m.ValidateForLoss());

  RunManifest missing = m;
  missing.labels = data_ / "nope.txt";
  EXPECT_THROW(missing.ValidateForLoss(), InvalidArgument);
  RunManifest bad = m;
  bad.lambda = 1.5;
  EXPECT_THROW(bad.ValidateForLoss(), InvalidArgument);
}

TEST(PresetTest, ReportedBestRows) {
  EXPECT_EQ(FindPreset("dev-best")->epsilon, 0.5);
  EXPECT_EQ(FindPreset("dev-best")->s, 0.1);
  EXPECT_EQ(FindPreset("test-best")->epsilon, 0.01);
  EXPECT_EQ(FindPreset("test-best")->s, 0.1);
  EXPECT_FALSE(FindPreset("other").has_value());
}

TEST(CliBinaryTest, ExitCodes) {
  const fs::path dir = TempDir("cli");
  const std::string d = dir.string();
  EXPECT_EQ(RunCli("synth --length-a 16 --length-t 8 --dim 4 --seed 5 --warp --out " + d), 0);
  const std::string inputs =
      " --acoustic " + d + "/acoustic.txt --linguistic " + d + "/linguistic.txt --out " + d + "/run";
  EXPECT_EQ(RunCli("coupling" + inputs), 0);
  EXPECT_EQ(RunCli("coupling" + inputs + " --max-iter 1 --strict"), 2);
  EXPECT_EQ(RunCli("coupling" + inputs + " --max-iter 1"), 0);
  EXPECT_EQ(RunCli("coupling --acoustic " + d + "/missing.txt --linguistic " + d +
                   "/linguistic.txt --out " + d),
            1);
  io::WriteTextAtomic(dir / "bad.txt", "2 4\n1 2 3 4\n1 2 x 4\n");
  EXPECT_EQ(RunCli("coupling --acoustic " + d + "/bad.txt --linguistic " + d +
                   "/linguistic.txt --out " + d),
            1);
  EXPECT_EQ(RunCli("coupling" + inputs + " --epsilon -1"), 1);
  EXPECT_EQ(RunCli("coupling" + inputs + " --preset nonsense"), 1);
  EXPECT_EQ(RunCli("bogus"), 1);
  EXPECT_EQ(RunCli("heatmap --coupling " + d + "/run/coupling.csv --out " + d + "/map.pgm"), 0);
  EXPECT_EQ(RunCli("loss" + inputs + " --labels " + d + "/labels.txt --weights " + d +
                   "/weights.json --preset dev-best"),
            0);
  const auto report = ReadJson(dir / "run" / kLossReportFile);
  EXPECT_EQ(report["epsilon"], 0.5);
  EXPECT_EQ(report["s"], 0.1);
}

}  // namespace
}  // namespace totalign::cli
