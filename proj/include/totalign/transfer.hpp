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

// Cross-modal transfer objective: OT projection of acoustic features into the
// linguistic space, the alignment loss against the linguistic features, the
// adapter fusing the projected branch back into the acoustic stream, softmax
// prediction, CTC, and the weighted total.

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "totalign/common.hpp"
#include "totalign/ctc.hpp"
#include "totalign/geometry.hpp"
#include "totalign/sinkhorn.hpp"

namespace totalign {

inline constexpr double kLayerNormEpsilon = 1e-5;
inline constexpr double kDefaultBeta = 0.5;
inline constexpr double kDefaultLambda = 0.3;
inline constexpr double kDefaultWeight = 1.0;

// y = x W^T + bias, applied row-wise. `weight` is out x in.
struct AffineMap {
  Matrix weight;
  Vector bias;

  Index in_dim() const { return weight.cols(); }
  Index out_dim() const { return weight.rows(); }

  void Validate(const char* name) const {
    detail::Require(weight.rows() >= 1 && weight.cols() >= 1,
                    std::string(name) + ": empty weight matrix");
    detail::Require(bias.size() == weight.rows(),
                    std::string(name) + ": bias length " + std::to_string(bias.size()) +
                        " != output dimension " + std::to_string(weight.rows()));
    detail::Require(detail::AllFinite(weight) && bias.allFinite(),
                    std::string(name) + ": entries must be finite");
  }

  Matrix Apply(const Matrix& x) const {
    detail::Require(x.cols() == in_dim(),
                    "AffineMap: input dimension " + std::to_string(x.cols()) +
                        " != " + std::to_string(in_dim()));
    Matrix y = x * weight.transpose();
    y.rowwise() += bias.transpose();
    return y;
  }
};

struct LayerNormParams {
  Vector gain;
  Vector bias;

  static LayerNormParams Identity(Index dim) {
    return {Vector::Ones(dim), Vector::Zero(dim)};
  }
};

// Per-row (x - mean) / sqrt(var + eps) * gain + bias, population variance.
inline Matrix LayerNorm(const Matrix& x, const LayerNormParams& p,
                        double eps = kLayerNormEpsilon) {
  detail::Require(p.gain.size() == x.cols() && p.bias.size() == x.cols(),
                  "LayerNorm: parameter length does not match feature dimension " +
                      std::to_string(x.cols()));
  Matrix y(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const auto centered = (x.row(i).array() - mean).eval();
    const double var = centered.square().mean();
    y.row(i) = (centered / std::sqrt(var + eps)) * p.gain.transpose().array() +
               p.bias.transpose().array();
  }
  return y;
}

// fc2: d_a -> d_t, fc3: d_t -> d_a, fc1: d_a -> vocab.
// ln_projected normalizes fc2's output (d_t); ln_fused normalizes fc3's (d_a).
struct AdapterWeights {
  AffineMap fc1;
  AffineMap fc2;
  AffineMap fc3;
  LayerNormParams ln_projected;
  LayerNormParams ln_fused;
  double s = 1.0;

  Index acoustic_dim() const { return fc2.in_dim(); }
  Index linguistic_dim() const { return fc2.out_dim(); }
  Index vocab_size() const { return fc1.out_dim(); }

  void Validate() const {
    fc1.Validate("fc1");
    fc2.Validate("fc2");
    fc3.Validate("fc3");
    const Index da = acoustic_dim();
    const Index dt = linguistic_dim();
    detail::Require(fc3.in_dim() == dt && fc3.out_dim() == da,
                    "AdapterWeights: fc3 must map " + std::to_string(dt) + " -> " +
                        std::to_string(da));
    detail::Require(fc1.in_dim() == da,
                    "AdapterWeights: fc1 input must be " + std::to_string(da));
    detail::Require(ln_projected.gain.size() == dt && ln_projected.bias.size() == dt,
                    "AdapterWeights: ln_projected must have length " + std::to_string(dt));
    detail::Require(ln_fused.gain.size() == da && ln_fused.bias.size() == da,
                    "AdapterWeights: ln_fused must have length " + std::to_string(da));
    detail::Require(ln_projected.gain.allFinite() && ln_projected.bias.allFinite() &&
                        ln_fused.gain.allFinite() && ln_fused.bias.allFinite(),
                    "AdapterWeights: layer norm parameters must be finite");
    detail::Require(s >= 0.0 && std::isfinite(s), "AdapterWeights: s must be >= 0");
  }
};

// Linguistic token ids framed by CLS ... SEP.
class TokenSequence {
 public:
  static constexpr int kDefaultCls = 101;
  static constexpr int kDefaultSep = 102;

  explicit TokenSequence(std::vector<int> ids, int cls_id = kDefaultCls,
                         int sep_id = kDefaultSep)
      : ids_(std::move(ids)), cls_(cls_id), sep_(sep_id) {
    detail::Require(ids_.size() >= 2, "TokenSequence: needs at least CLS and SEP");
    detail::Require(ids_.front() == cls_, "TokenSequence: first id must be CLS (" +
                                              std::to_string(cls_) + ")");
    detail::Require(ids_.back() == sep_, "TokenSequence: last id must be SEP (" +
                                             std::to_string(sep_) + ")");
  }

  const std::vector<int>& ids() const { return ids_; }
  int cls_id() const { return cls_; }
  int sep_id() const { return sep_; }

  // The tokens between the sentinels; the CTC target.
  std::span<const int> Interior() const {
    return std::span<const int>(ids_).subspan(1, ids_.size() - 2);
  }

 private:
  std::vector<int> ids_;
  int cls_;
  int sep_;
};

struct SolverDiagnostics {
  int iterations = 0;
  double violation = 0.0;
  bool converged = false;
  bool log_domain = false;
};

struct LossReport {
  std::optional<double> ctc;  // empty when the labels cannot be aligned
  double align = 0.0;
  double tot = 0.0;
  std::optional<double> total;  // empty exactly when ctc is
  double lambda = kDefaultLambda;
  double w = kDefaultWeight;

  // <gamma, C~> - epsilon H(gamma), the regularized value of the OT term.
  double tot_regularized = 0.0;
  SolverDiagnostics solver;
};

// lambda * ctc + (1 - lambda) * w * (align + tot)
inline LossReport TotalLoss(double ctc, double align, double tot,
                            double lambda = kDefaultLambda, double w = kDefaultWeight) {
  detail::Require(lambda >= 0.0 && lambda <= 1.0, "TotalLoss: lambda must be in [0, 1]");
  detail::Require(w >= 0.0, "TotalLoss: w must be >= 0");
  LossReport r;
  r.ctc = ctc;
  r.align = align;
  r.tot = tot;
  r.lambda = lambda;
  r.w = w;
  r.total = lambda * ctc + (1.0 - lambda) * w * (align + tot);
  return r;
}

// Barycentric projection of h onto the column positions of gamma:
// row j = sum_i gamma(i,j) h_i / b_j.
inline FeatureSequence Project(const CouplingMatrix& gamma, const FeatureSequence& h) {
  detail::Require(gamma.rows() == h.length(),
                  "Project: coupling has " + std::to_string(gamma.rows()) +
                      " rows but sequence length is " + std::to_string(h.length()));
  const Vector& b = gamma.col_marginals().values();
  detail::Require((b.array() > 0.0).all(), "Project: zero column marginal");
  Matrix projected = gamma.entries().transpose() * h.data();
  for (Index j = 0; j < projected.rows(); ++j) projected.row(j) /= b[j];
  return FeatureSequence(std::move(projected), "projected");
}

// Sum of cosine distances over interior rows, skipping the CLS and SEP rows.
inline double AlignmentLoss(const FeatureSequence& projected, const FeatureSequence& z) {
  detail::RequireSameShape(projected.data(), z.data(), "AlignmentLoss");
  detail::Require(z.length() >= 3, "AlignmentLoss: need at least 3 rows (CLS, token, SEP)");
  double loss = 0.0;
  for (Index j = 1; j + 1 < z.length(); ++j) {
    loss += CosineDistance(projected.row(j), z.row(j));
  }
  return loss;
}

struct AdapterOutput {
  FeatureSequence projected;  // fc2(h_ca), the OT-side feature
  FeatureSequence fused;      // h_ca + s * LN(fc3(LN(fc2(h_ca))))
};

inline AdapterOutput AdapterForward(const FeatureSequence& h_ca, const AdapterWeights& w) {
  w.Validate();
  detail::Require(h_ca.dim() == w.acoustic_dim(),
                  "AdapterForward: acoustic dimension " + std::to_string(h_ca.dim()) +
                      " != " + std::to_string(w.acoustic_dim()));
  Matrix h_a = w.fc2.Apply(h_ca.data());
  Matrix fused = h_ca.data();
  if (w.s != 0.0) {
    const Matrix hat = w.fc3.Apply(LayerNorm(h_a, w.ln_projected));
    fused += w.s * LayerNorm(hat, w.ln_fused);
  }
  return {FeatureSequence(std::move(h_a), "acoustic"),
          FeatureSequence(std::move(fused), "fused")};
}

inline Matrix LogSoftmaxRows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    out.row(i) = logits.row(i).array() - detail::LogSumExp(logits.row(i));
  }
  return out;
}

inline Matrix SoftmaxRows(const Matrix& logits) {
  Matrix out = LogSoftmaxRows(logits).array().exp().matrix();
  // Renormalize so each row sums to 1 up to a final rounding.
  for (Index i = 0; i < out.rows(); ++i) out.row(i) /= out.row(i).sum();
  return out;
}

// softmax(fc1(h_fused)), one distribution over the vocabulary per frame.
inline Matrix SoftmaxPredict(const FeatureSequence& fused, const AdapterWeights& w) {
  w.fc1.Validate("fc1");
  return SoftmaxRows(w.fc1.Apply(fused.data()));
}

struct TransferConfig {
  double beta = kDefaultBeta;
  SinkhornConfig sinkhorn;
  double lambda = kDefaultLambda;
  double w = kDefaultWeight;
  int blank = 0;
};

// Runs both branches for one acoustic/linguistic pair and assembles the total.
// `z` holds the full linguistic sequence including CLS and SEP rows.
inline LossReport EvaluatePair(const FeatureSequence& h_ca, const FeatureSequence& z,
                               const TokenSequence& labels, const AdapterWeights& weights,
                               const TransferConfig& cfg = {}) {
  detail::Require(cfg.lambda >= 0.0 && cfg.lambda <= 1.0,
                  "EvaluatePair: lambda must be in [0, 1]");
  detail::Require(cfg.w >= 0.0, "EvaluatePair: w must be >= 0");
  const AdapterOutput adapted = AdapterForward(h_ca, weights);

  const CostMatrix cost = CombinedCostBeta(CosineCost(adapted.projected, z), cfg.beta);
  const SinkhornResult ot =
      Sinkhorn(cost, MarginalWeights::Uniform(h_ca.length()),
               MarginalWeights::Uniform(z.length()), cfg.sinkhorn);
  const double align = AlignmentLoss(Project(ot.coupling, adapted.projected), z);
  const double tot = OtObjective(ot.coupling, cost);

  const Matrix log_probs = LogSoftmaxRows(weights.fc1.Apply(adapted.fused.data()));
  const CtcLoss ctc = ComputeCtcLoss(log_probs, labels.Interior(), cfg.blank);

  LossReport report;
  if (ctc.feasible) {
    report = TotalLoss(ctc.value, align, tot, cfg.lambda, cfg.w);
  } else {
    report.align = align;
    report.tot = tot;
    report.lambda = cfg.lambda;
    report.w = cfg.w;
  }
  report.tot_regularized = tot - cfg.sinkhorn.epsilon * Entropy(ot.coupling);
  report.solver = {ot.iterations, ot.violation, ot.converged, ot.log_domain};
  return report;
}

}  // namespace totalign
