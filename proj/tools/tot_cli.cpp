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

// tot_cli: temporal-order-preserved OT couplings and transfer losses.
//
//   tot_cli synth    --length-a 40 --length-t 20 --dim 16 --seed 7 --warp --out data/
//   tot_cli coupling --acoustic data/acoustic.txt --linguistic data/linguistic.txt --out run/
//   tot_cli heatmap  --coupling run/coupling.csv --out run/coupling.pgm
//   tot_cli loss     --manifest run.json

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "totalign/commands.hpp"

namespace {

using totalign::cli::RunManifest;

// Flags shared by `coupling` and `loss`. Explicit flags override the manifest,
// which overrides the preset, which overrides the defaults.
struct RunFlags {
  std::string manifest;
  std::string preset;
  std::string acoustic, linguistic, labels, weights, out;
  double beta = 0, epsilon = 0, lambda = 0, w = 0, s = 0, tol = 0;
  int max_iter = 0, blank = 0, cls_id = 0, sep_id = 0;
  bool stabilized = false;
  bool strict = false;

  CLI::Option* beta_opt = nullptr;
  CLI::Option* epsilon_opt = nullptr;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* w_opt = nullptr;
  CLI::Option* s_opt = nullptr;
  CLI::Option* tol_opt = nullptr;
  CLI::Option* max_iter_opt = nullptr;
  CLI::Option* blank_opt = nullptr;
  CLI::Option* cls_opt = nullptr;
  CLI::Option* sep_opt = nullptr;

  void Register(CLI::App* app, bool with_loss_inputs) {
    app->add_option("--manifest", manifest, "JSON run manifest");
    app->add_option("--preset", preset, "Named configuration")
        ->check(CLI::IsMember({"dev-best", "test-best"}));
    app->add_option("--acoustic", acoustic, "Acoustic feature file");
    app->add_option("--linguistic", linguistic, "Linguistic feature file");
    app->add_option("--out", out, "Output directory");
    beta_opt = app->add_option("--beta", beta, "Temporal penalty weight (default 0.5)");
    epsilon_opt = app->add_option("--epsilon", epsilon, "Sinkhorn temperature (default 0.5)");
    tol_opt = app->add_option("--tol", tol, "Marginal violation tolerance (default 1e-9)");
    max_iter_opt = app->add_option("--max-iter", max_iter, "Sinkhorn iteration cap (default 10000)");
    app->add_flag("--stabilized", stabilized, "Force the log-domain solver");
    app->add_flag("--strict", strict, "Exit 2 when the solver does not converge");
    if (with_loss_inputs) {
      app->add_option("--labels", labels, "Label id file (CLS ... SEP)");
      app->add_option("--weights", weights, "Adapter weights JSON");
      lambda_opt = app->add_option("--lambda", lambda, "CTC weight (default 0.3)");
      w_opt = app->add_option("--w", w, "Transfer-branch scale (default 1.0)");
      s_opt = app->add_option("--s", s, "Adapter fusion scale (default: from weights)");
      blank_opt = app->add_option("--blank", blank, "CTC blank id (default 0)");
      cls_opt = app->add_option("--cls-id", cls_id, "CLS sentinel id (default 101)");
      sep_opt = app->add_option("--sep-id", sep_id, "SEP sentinel id (default 102)");
    }
  }

  RunManifest Resolve() const {
    RunManifest m = manifest.empty() ? RunManifest{} : RunManifest::Load(manifest);
    if (!preset.empty()) {
      m.ApplyPreset(*totalign::cli::FindPreset(preset));
    }
    if (!acoustic.empty()) m.acoustic = acoustic;
    if (!linguistic.empty()) m.linguistic = linguistic;
    if (!labels.empty()) m.labels = labels;
    if (!weights.empty()) m.weights = weights;
    if (!out.empty()) m.output_dir = out;
    auto given = [](const CLI::Option* o) { return o != nullptr && o->count() > 0; };
    if (given(beta_opt)) m.beta = beta;
    if (given(epsilon_opt)) m.epsilon = epsilon;
    if (given(tol_opt)) m.tolerance = tol;
    if (given(max_iter_opt)) m.max_iterations = max_iter;
    if (given(lambda_opt)) m.lambda = lambda;
    if (given(w_opt)) m.w = w;
    if (given(s_opt)) m.s = s;
    if (given(blank_opt)) m.blank = blank;
    if (given(cls_opt)) m.cls_id = cls_id;
    if (given(sep_opt)) m.sep_id = sep_id;
    if (stabilized) m.stabilized = true;
    if (strict) m.strict = true;
    return m;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal-order-preserved optimal transport alignment"};
  app.require_subcommand(1);

  RunFlags coupling_flags;
  auto* coupling = app.add_subcommand("coupling", "Solve the coupling and write CSV + stats");
  coupling_flags.Register(coupling, false);

  RunFlags loss_flags;
  auto* loss = app.add_subcommand("loss", "Evaluate the transfer objective for one pair");
  loss_flags.Register(loss, true);

  std::string heat_in, heat_out;
  auto* heatmap = app.add_subcommand("heatmap", "Render a coupling CSV as a P2 graymap");
  heatmap->add_option("--coupling", heat_in, "Coupling CSV")->required();
  heatmap->add_option("--out", heat_out, "Output .pgm path")->required();

  totalign::SynthOptions synth_opt;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic pair");
  synth->add_option("--length-a", synth_opt.length_a, "Acoustic length")->required();
  synth->add_option("--length-t", synth_opt.length_t, "Linguistic length")->required();
  synth->add_option("--dim", synth_opt.dim, "Feature dimension")->required();
  synth->add_option("--seed", synth_opt.seed, "Generator seed")->required();
  synth->add_flag("--warp", synth_opt.warp, "Stretch tokens monotonically over frames");
  synth->add_option("--noise", synth_opt.noise, "Acoustic noise std (default 0.1)");
  synth->add_option("--vocab", synth_opt.vocab, "Vocabulary size incl. blank (default 8)");
  synth->add_option("--out", synth_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : totalign::cli::kInputError;
  }

  try {
    if (*coupling) return totalign::cli::RunCoupling(coupling_flags.Resolve());
    if (*loss) return totalign::cli::RunLoss(loss_flags.Resolve());
    if (*heatmap) return totalign::cli::RunHeatmap(heat_in, heat_out);
    if (*synth) return totalign::cli::RunSynth(synth_opt, synth_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return totalign::cli::kInputError;
  }
  return totalign::cli::kInputError;
}
