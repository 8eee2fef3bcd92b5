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

// Ground costs and temporal priors between two feature sequences.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "totalign/common.hpp"

namespace totalign {

// An ordered sequence of feature vectors (rows), acoustic or linguistic.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  explicit FeatureSequence(Matrix data, std::string modality = {})
      : data_(std::move(data)), modality_(std::move(modality)) {
    detail::Require(data_.rows() >= 1 && data_.cols() >= 1,
                    "FeatureSequence: length and dimension must be >= 1, got " +
                        detail::Shape(data_.rows(), data_.cols()));
    detail::Require(detail::AllFinite(data_),
                    "FeatureSequence: entries must be finite");
  }

  const Matrix& data() const { return data_; }
  const std::string& modality() const { return modality_; }
  Index length() const { return data_.rows(); }
  Index dim() const { return data_.cols(); }
  auto row(Index i) const { return data_.row(i); }

 private:
  Matrix data_;
  std::string modality_;
};

// A strictly positive probability vector.
class MarginalWeights {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit MarginalWeights(Vector weights) : weights_(std::move(weights)) {
    detail::Require(weights_.size() >= 1, "MarginalWeights: empty");
    detail::Require((weights_.array() > 0.0).all() && weights_.allFinite(),
                    "MarginalWeights: entries must be finite and > 0");
    detail::Require(std::abs(weights_.sum() - 1.0) <= kSumTolerance,
                    "MarginalWeights: entries must sum to 1");
  }

  static MarginalWeights Uniform(Index n) {
    detail::Require(n >= 1, "MarginalWeights: length must be >= 1");
    return MarginalWeights(Vector::Constant(n, 1.0 / static_cast<double>(n)));
  }

  const Vector& values() const { return weights_; }
  Index size() const { return weights_.size(); }
  double operator[](Index i) const { return weights_[i]; }

 private:
  Vector weights_;
};

// Pairwise ground cost between acoustic (rows) and linguistic (cols) positions.
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(Matrix entries) : entries_(std::move(entries)) {
    detail::Require(entries_.rows() >= 1 && entries_.cols() >= 1,
                    "CostMatrix: empty");
    detail::Require(detail::AllFinite(entries_),
                    "CostMatrix: entries must be finite");
  }

  const Matrix& entries() const { return entries_; }
  Index rows() const { return entries_.rows(); }
  Index cols() const { return entries_.cols(); }
  double operator()(Index i, Index j) const { return entries_(i, j); }

 private:
  Matrix entries_;
};

// Gaussian diagonal-coherence prior. Not normalized to unit mass. The log of
// each entry is kept alongside the entry so narrow priors stay exact in the
// combined cost even where exp() would underflow.
class TemporalPrior {
 public:
  TemporalPrior(Matrix entries, double sigma) : entries_(std::move(entries)), sigma_(sigma) {
    detail::Require(sigma_ > 0.0, "TemporalPrior: sigma must be > 0");
    detail::Require(entries_.rows() >= 1 && entries_.cols() >= 1, "TemporalPrior: empty");
    detail::Require((entries_.array() > 0.0).all() && detail::AllFinite(entries_),
                    "TemporalPrior: entries must be finite and > 0");
    log_entries_ = entries_.array().log().matrix();
  }

  static TemporalPrior FromLog(Matrix log_entries, double sigma) {
    detail::Require(sigma > 0.0, "TemporalPrior: sigma must be > 0");
    detail::Require(log_entries.rows() >= 1 && log_entries.cols() >= 1, "TemporalPrior: empty");
    detail::Require(detail::AllFinite(log_entries), "TemporalPrior: log entries must be finite");
    TemporalPrior p;
    p.entries_ = log_entries.unaryExpr([](double x) { return std::exp(x); });
    p.log_entries_ = std::move(log_entries);
    p.sigma_ = sigma;
    return p;
  }

  const Matrix& entries() const { return entries_; }
  const Matrix& log_entries() const { return log_entries_; }
  double sigma() const { return sigma_; }
  Index rows() const { return entries_.rows(); }
  Index cols() const { return entries_.cols(); }
  double operator()(Index i, Index j) const { return entries_(i, j); }

 private:
  TemporalPrior() = default;

  Matrix entries_;
  Matrix log_entries_;
  double sigma_ = 1.0;
};

// 1 - cos(x, y). A zero-norm argument is treated as orthogonal (cost 1).
template <typename A, typename B>
double CosineDistance(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return 1.0;
  const double cosine = x.dot(y) / (nx * ny);
  return 1.0 - std::clamp(cosine, -1.0, 1.0);
}

inline CostMatrix CosineCost(const FeatureSequence& h, const FeatureSequence& z) {
  detail::Require(h.dim() == z.dim(),
                  "CosineCost: feature dimension mismatch (" +
                      std::to_string(h.dim()) + " vs " + std::to_string(z.dim()) + ")");
  Matrix cost(h.length(), z.length());
  for (Index i = 0; i < h.length(); ++i) {
    for (Index j = 0; j < z.length(); ++j) {
      cost(i, j) = CosineDistance(h.row(i), z.row(j));
    }
  }
  return CostMatrix(std::move(cost));
}

// Normalized cross-temporal distance on 1-based positions:
//   d(i,j) = |i/la - j/lt| / sqrt(1/la^2 + 1/lt^2)
inline Matrix TemporalDistance(Index la, Index lt) {
  detail::Require(la >= 1 && lt >= 1, "TemporalDistance: lengths must be >= 1");
  const double fa = static_cast<double>(la);
  const double ft = static_cast<double>(lt);
  const double scale = std::sqrt(1.0 / (fa * fa) + 1.0 / (ft * ft));
  Matrix d(la, lt);
  for (Index i = 0; i < la; ++i) {
    for (Index j = 0; j < lt; ++j) {
      // i/la - j/lt == (i*lt - j*la) / (la*lt), exact zero on the diagonal.
      const double num = static_cast<double>((i + 1) * lt - (j + 1) * la);
      d(i, j) = std::abs(num) / (fa * ft) / scale;
    }
  }
  return d;
}

inline TemporalPrior GaussianPrior(Index la, Index lt, double sigma) {
  detail::Require(sigma > 0.0, "GaussianPrior: sigma must be > 0");
  const Matrix d = TemporalDistance(la, lt);
  const double log_peak = -std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
  Matrix log_p = (log_peak - d.array().square() / (2.0 * sigma * sigma)).matrix();
  return TemporalPrior::FromLog(std::move(log_p), sigma);
}

// C - alpha2 * log(P)
inline CostMatrix CombinedCostKl(const CostMatrix& c, const TemporalPrior& p, double alpha2) {
  detail::RequireSameShape(c.entries(), p.entries(), "CombinedCostKl");
  detail::Require(alpha2 >= 0.0, "CombinedCostKl: alpha2 must be >= 0");
  if (alpha2 == 0.0) return c;
  return CostMatrix((c.entries().array() - alpha2 * p.log_entries().array()).matrix());
}

// C + beta * d^2, the single-parameter form of the temporal penalty.
inline CostMatrix CombinedCostBeta(const CostMatrix& c, double beta) {
  detail::Require(beta >= 0.0, "CombinedCostBeta: beta must be >= 0");
  if (beta == 0.0) return c;
  const Matrix d = TemporalDistance(c.rows(), c.cols());
  return CostMatrix((c.entries().array() + beta * d.array().square()).matrix());
}

// beta = alpha2 / (2 sigma^2) makes the two combined costs differ by the
// uniform constant alpha2 * log(sigma * sqrt(2 pi)).
inline double BetaFromKl(double alpha2, double sigma) {
  detail::Require(sigma > 0.0, "BetaFromKl: sigma must be > 0");
  return alpha2 / (2.0 * sigma * sigma);
}

}  // namespace totalign
