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

// Command implementations behind the tot_cli front end. Each command reads its
// inputs, writes its outputs atomically, and returns a process exit code.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "totalign/common.hpp"
#include "totalign/geometry.hpp"
#include "totalign/io.hpp"
#include "totalign/sinkhorn.hpp"
#include "totalign/synth.hpp"
#include "totalign/transfer.hpp"

namespace totalign::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kInputError = 1, kNotConverged = 2 };

struct Preset {
  const char* name;
  double epsilon;
  double s;
};

// Best dev-set and test-set rows of the reported sweep.
inline constexpr Preset kDevBest{"dev-best", 0.5, 0.1};
inline constexpr Preset kTestBest{"test-best", 0.01, 0.1};

inline std::optional<Preset> FindPreset(const std::string& name) {
  if (name == kDevBest.name) return kDevBest;
  if (name == kTestBest.name) return kTestBest;
  return std::nullopt;
}

struct RunManifest {
  fs::path acoustic;
  fs::path linguistic;
  fs::path labels;
  fs::path weights;
  fs::path output_dir = ".";

  double beta = kDefaultBeta;
  double epsilon = 0.5;
  double lambda = kDefaultLambda;
  double w = kDefaultWeight;
  std::optional<double> s;  // overrides the scale stored with the weights
  double tolerance = 1e-9;
  int max_iterations = 10000;
  bool stabilized = false;
  bool strict = false;
  int blank = 0;
  int cls_id = TokenSequence::kDefaultCls;
  int sep_id = TokenSequence::kDefaultSep;

  void ApplyPreset(const Preset& p) {
    epsilon = p.epsilon;
    s = p.s;
  }

  SinkhornConfig Sinkhorn() const {
    SinkhornConfig cfg;
    cfg.epsilon = epsilon;
    cfg.tolerance = tolerance;
    cfg.max_iterations = max_iterations;
    cfg.mode = stabilized ? SinkhornConfig::Mode::kLogDomain : SinkhornConfig::Mode::kAuto;
    return cfg;
  }

  void ValidateHyperParameters() const {
    detail::Require(beta >= 0.0, "manifest: beta must be >= 0");
    detail::Require(lambda >= 0.0 && lambda <= 1.0, "manifest: lambda must be in [0, 1]");
    detail::Require(w >= 0.0, "manifest: w must be >= 0");
    detail::Require(!s || *s >= 0.0, "manifest: s must be >= 0");
    Sinkhorn().Validate();
  }

  static void RequireFile(const fs::path& p, const char* what) {
    detail::Require(!p.empty(), std::string("manifest: missing ") + what + " path");
    detail::Require(fs::is_regular_file(p),
                    std::string("manifest: ") + what + " file not found: " + p.string());
  }

  void ValidateForCoupling() const {
    RequireFile(acoustic, "acoustic");
    RequireFile(linguistic, "linguistic");
    ValidateHyperParameters();
  }

  void ValidateForLoss() const {
    ValidateForCoupling();
    RequireFile(labels, "labels");
    RequireFile(weights, "weights");
  }

  // Relative paths inside the manifest resolve against the manifest's folder.
  static RunManifest FromJson(const nlohmann::json& j, const fs::path& base = {}) {
    RunManifest m;
    auto path = [&](const char* key, fs::path& out) {
      if (!j.contains(key)) return;
      fs::path p = j.at(key).get<std::string>();
      out = p.is_relative() && !base.empty() ? base / p : p;
    };
    auto real = [&](const char* key, double& out) {
      if (j.contains(key)) out = j.at(key).get<double>();
    };
    path("acoustic", m.acoustic);
    path("linguistic", m.linguistic);
    path("labels", m.labels);
    path("weights", m.weights);
    path("output_dir", m.output_dir);
    if (j.contains("preset")) {
      const auto preset = FindPreset(j.at("preset").get<std::string>());
      detail::Require(preset.has_value(), "manifest: unknown preset");
      m.ApplyPreset(*preset);
    }
    real("beta", m.beta);
    real("epsilon", m.epsilon);
    real("lambda", m.lambda);
    real("w", m.w);
    if (j.contains("s")) m.s = j.at("s").get<double>();
    real("tolerance", m.tolerance);
    if (j.contains("max_iterations")) m.max_iterations = j.at("max_iterations").get<int>();
    if (j.contains("stabilized")) m.stabilized = j.at("stabilized").get<bool>();
    if (j.contains("strict")) m.strict = j.at("strict").get<bool>();
    if (j.contains("blank")) m.blank = j.at("blank").get<int>();
    if (j.contains("cls_id")) m.cls_id = j.at("cls_id").get<int>();
    if (j.contains("sep_id")) m.sep_id = j.at("sep_id").get<int>();
    return m;
  }

  static RunManifest Load(const fs::path& file) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(io::ReadText(file));
      return FromJson(j, file.parent_path());
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(file.string() + ": " + e.what());
    }
  }
};

inline constexpr const char* kCouplingFile = "coupling.csv";
inline constexpr const char* kCouplingStatsFile = "coupling_stats.json";
inline constexpr const char* kLossReportFile = "loss_report.json";

inline void EnsureDir(const fs::path& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

inline std::string DumpJson(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline int RunCoupling(const RunManifest& m) {
  m.ValidateForCoupling();
  const FeatureSequence h = io::ReadFeatureFile(m.acoustic, "acoustic");
  const FeatureSequence z = io::ReadFeatureFile(m.linguistic, "linguistic");
  const CostMatrix cosine = CosineCost(h, z);
  const CostMatrix combined = CombinedCostBeta(cosine, m.beta);
  const SinkhornResult r = Sinkhorn(combined, MarginalWeights::Uniform(h.length()),
                                    MarginalWeights::Uniform(z.length()), m.Sinkhorn());
  const Matrix& gamma = r.coupling.entries();

  nlohmann::json stats{
      {"rows", gamma.rows()},
      {"cols", gamma.cols()},
      {"beta", m.beta},
      {"epsilon", m.epsilon},
      {"iterations", r.iterations},
      {"marginal_violation", r.violation},
      {"converged", r.converged},
      {"log_domain", r.log_domain},
      {"transport_cost", OtObjective(gamma, cosine.entries())},
      {"combined_cost", OtObjective(gamma, combined.entries())},
      {"temporal_spread", TemporalSpread(gamma)},
      {"entropy", Entropy(gamma)},
      {"near_diagonal_mass", NearDiagonalMass(gamma)},
  };
  EnsureDir(m.output_dir);
  io::WriteTextAtomic(m.output_dir / kCouplingFile, io::FormatCouplingCsv(gamma));
  io::WriteTextAtomic(m.output_dir / kCouplingStatsFile, DumpJson(stats));
  return (m.strict && !r.converged) ? kNotConverged : kOk;
}

inline int RunHeatmap(const fs::path& csv, const fs::path& out) {
  const Matrix gamma = io::ParseCouplingCsv(io::ReadText(csv), csv.string());
  if (out.has_parent_path()) EnsureDir(out.parent_path());
  io::WriteTextAtomic(out, io::FormatHeatmapPgm(gamma));
  return kOk;
}

inline nlohmann::json LossReportToJson(const LossReport& r) {
  nlohmann::json j{
      {"ctc_feasible", r.ctc.has_value()},
      {"align", r.align},
      {"tot", r.tot},
      {"tot_regularized", r.tot_regularized},
      {"lambda", r.lambda},
      {"w", r.w},
      {"solver",
       {{"iterations", r.solver.iterations},
        {"marginal_violation", r.solver.violation},
        {"converged", r.solver.converged},
        {"log_domain", r.solver.log_domain}}},
  };
  if (r.ctc) j["ctc"] = *r.ctc;
  if (r.total) j["total"] = *r.total;
  return j;
}

inline int RunLoss(const RunManifest& m) {
  m.ValidateForLoss();
  const FeatureSequence h = io::ReadFeatureFile(m.acoustic, "acoustic");
  const FeatureSequence z = io::ReadFeatureFile(m.linguistic, "linguistic");
  const TokenSequence labels(io::ParseLabelText(io::ReadText(m.labels), m.labels.string()),
                             m.cls_id, m.sep_id);
  AdapterWeights weights = io::ReadAdapterWeights(m.weights);
  if (m.s) weights.s = *m.s;

  TransferConfig cfg;
  cfg.beta = m.beta;
  cfg.sinkhorn = m.Sinkhorn();
  cfg.lambda = m.lambda;
  cfg.w = m.w;
  cfg.blank = m.blank;
  const LossReport report = EvaluatePair(h, z, labels, weights, cfg);

  nlohmann::json j = LossReportToJson(report);
  j["beta"] = m.beta;
  j["epsilon"] = m.epsilon;
  j["s"] = weights.s;
  EnsureDir(m.output_dir);
  io::WriteTextAtomic(m.output_dir / kLossReportFile, DumpJson(j));
  return (m.strict && !report.solver.converged) ? kNotConverged : kOk;
}

inline constexpr const char* kAcousticFile = "acoustic.txt";
inline constexpr const char* kLinguisticFile = "linguistic.txt";
inline constexpr const char* kLabelsFile = "labels.txt";
inline constexpr const char* kWeightsFile = "weights.json";
inline constexpr const char* kAlignmentFile = "alignment.txt";

// Writes acoustic/linguistic feature files, labels, adapter weights, and the
// ground-truth frame -> token map (1-based, one per line).
inline int RunSynth(const SynthOptions& opt, const fs::path& out_dir) {
  const SynthPair pair = Synthesize(opt);
  EnsureDir(out_dir);
  io::WriteFeatureFile(out_dir / kAcousticFile, pair.acoustic);
  io::WriteFeatureFile(out_dir / kLinguisticFile, pair.linguistic);
  io::WriteTextAtomic(out_dir / kLabelsFile, io::FormatLabelText(pair.labels.ids()));
  io::WriteAdapterWeights(out_dir / kWeightsFile, pair.weights);
  std::string alignment;
  for (Index j : pair.correspondence) alignment += std::to_string(j + 1) + "\n";
  io::WriteTextAtomic(out_dir / kAlignmentFile, alignment);
  return kOk;
}

}  // namespace totalign::cli
