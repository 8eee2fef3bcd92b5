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

// Entropic optimal transport by Sinkhorn scaling, with a log-domain variant
// for small temperatures, plus the transport objectives used to score a
// coupling.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "totalign/common.hpp"
#include "totalign/geometry.hpp"

namespace totalign {

struct SinkhornConfig {
  enum class Mode {
    kAuto,       // log domain when epsilon < kLogDomainThreshold
    kScaling,    // multiplicative updates on exp(-C / epsilon)
    kLogDomain,  // log-sum-exp updates on the dual potentials
  };

  static constexpr double kLogDomainThreshold = 0.05;

  double epsilon = 0.5;
  int max_iterations = 10000;
  // Max of the row and column L1 marginal violations.
  double tolerance = 1e-9;
  Mode mode = Mode::kAuto;

  void Validate() const {
    detail::Require(epsilon > 0.0 && std::isfinite(epsilon),
                    "SinkhornConfig: epsilon must be > 0");
    detail::Require(tolerance > 0.0, "SinkhornConfig: tolerance must be > 0");
    detail::Require(max_iterations >= 1,
                    "SinkhornConfig: max_iterations must be >= 1");
  }

  bool UsesLogDomain() const {
    switch (mode) {
      case Mode::kScaling: return false;
      case Mode::kLogDomain: return true;
      case Mode::kAuto: break;
    }
    return epsilon < kLogDomainThreshold;
  }
};

// Nonnegative transport plan together with the marginals it was solved for.
class CouplingMatrix {
 public:
  CouplingMatrix(Matrix entries, MarginalWeights rows, MarginalWeights cols)
      : entries_(std::move(entries)), rows_(std::move(rows)), cols_(std::move(cols)) {
    detail::Require(entries_.rows() == rows_.size() && entries_.cols() == cols_.size(),
                    "CouplingMatrix: shape " +
                        detail::Shape(entries_.rows(), entries_.cols()) +
                        " does not match marginals " +
                        detail::Shape(rows_.size(), cols_.size()));
    detail::Require(detail::AllFinite(entries_) && (entries_.array() >= 0.0).all(),
                    "CouplingMatrix: entries must be finite and >= 0");
  }

  // Wraps a plan whose marginals are its own (normalized) row and column sums.
  static CouplingMatrix FromEntries(Matrix entries) {
    detail::Require(entries.rows() >= 1 && entries.cols() >= 1, "CouplingMatrix: empty");
    detail::Require(detail::AllFinite(entries) && (entries.array() >= 0.0).all(),
                    "CouplingMatrix: entries must be finite and >= 0");
    const double mass = entries.sum();
    detail::Require(mass > 0.0, "CouplingMatrix: total mass must be > 0");
    Vector r = entries.rowwise().sum() / mass;
    Vector c = entries.colwise().sum().transpose() / mass;
    r /= r.sum();
    c /= c.sum();
    return CouplingMatrix(std::move(entries), MarginalWeights(std::move(r)),
                          MarginalWeights(std::move(c)));
  }

  const Matrix& entries() const { return entries_; }
  const MarginalWeights& row_marginals() const { return rows_; }
  const MarginalWeights& col_marginals() const { return cols_; }
  Index rows() const { return entries_.rows(); }
  Index cols() const { return entries_.cols(); }
  double operator()(Index i, Index j) const { return entries_(i, j); }

  double RowViolation() const {
    return (entries_.rowwise().sum() - rows_.values()).lpNorm<1>();
  }
  double ColViolation() const {
    return (entries_.colwise().sum().transpose() - cols_.values()).lpNorm<1>();
  }
  double MarginalViolation() const { return std::max(RowViolation(), ColViolation()); }

 private:
  Matrix entries_;
  MarginalWeights rows_;
  MarginalWeights cols_;
};

struct SinkhornResult {
  CouplingMatrix coupling;
  int iterations = 0;
  double violation = 0.0;
  bool converged = false;
  bool log_domain = false;
};

namespace detail {

inline SinkhornResult SinkhornScaling(const Matrix& cost, const Vector& a, const Vector& b,
                                      const SinkhornConfig& cfg) {
  // std::exp rather than Eigen's vectorized exp, which clamps large negative
  // arguments instead of underflowing to zero.
  const Matrix kernel = cost.unaryExpr([&](double c) { return std::exp(-c / cfg.epsilon); });
  if ((kernel.rowwise().maxCoeff().array() <= 0.0).any() ||
      (kernel.colwise().maxCoeff().array() <= 0.0).any()) {
    throw SolverError("Sinkhorn: kernel exp(-C/epsilon) underflows at epsilon=" +
                      std::to_string(cfg.epsilon) + "; use the log-domain solver");
  }
  Vector u = Vector::Ones(a.size());
  Vector v = Vector::Ones(b.size());
  Vector kv = kernel * v;
  int it = 0;
  double violation = INFINITY;
  while (it < cfg.max_iterations) {
    ++it;
    u = a.array() / kv.array();
    const Vector ktu = kernel.transpose() * u;
    v = b.array() / ktu.array();
    if (!u.allFinite() || !v.allFinite()) {
      throw SolverError("Sinkhorn: scaling vectors overflowed at iteration " +
                        std::to_string(it) + "; use the log-domain solver");
    }
    kv = kernel * v;
    const double row_err = (u.array() * kv.array() - a.array()).abs().sum();
    const double col_err = (v.array() * ktu.array() - b.array()).abs().sum();
    violation = std::max(row_err, col_err);
    if (violation < cfg.tolerance) break;
  }
  Matrix plan = u.asDiagonal() * kernel * v.asDiagonal();
  if (!AllFinite(plan)) {
    throw SolverError("Sinkhorn: non-finite coupling; use the log-domain solver");
  }
  return {CouplingMatrix(std::move(plan), MarginalWeights(a), MarginalWeights(b)), it,
          violation, violation < cfg.tolerance, false};
}

// Same iterates as SinkhornScaling, carried as log u and log v.
inline SinkhornResult SinkhornLog(const Matrix& cost, const Vector& a, const Vector& b,
                                  const SinkhornConfig& cfg) {
  const Index n = cost.rows();
  const Index m = cost.cols();
  const Matrix log_kernel = -cost / cfg.epsilon;
  const Vector log_a = a.array().log();
  const Vector log_b = b.array().log();
  Vector log_u = Vector::Zero(n);
  Vector log_v = Vector::Zero(m);
  Vector row_lse(n);
  Vector col_lse(m);

  auto row_sums = [&] {
    for (Index i = 0; i < n; ++i) {
      row_lse[i] = LogSumExp(log_kernel.row(i).transpose() + log_v);
    }
  };
  auto col_sums = [&] {
    for (Index j = 0; j < m; ++j) {
      col_lse[j] = LogSumExp(log_kernel.col(j) + log_u);
    }
  };

  row_sums();
  int it = 0;
  double violation = INFINITY;
  while (it < cfg.max_iterations) {
    ++it;
    log_u = log_a - row_lse;
    col_sums();
    log_v = log_b - col_lse;
    row_sums();
    const double row_err = ((log_u + row_lse).array().exp() - a.array()).abs().sum();
    const double col_err = ((log_v + col_lse).array().exp() - b.array()).abs().sum();
    violation = std::max(row_err, col_err);
    if (violation < cfg.tolerance) break;
  }
  Matrix plan(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      plan(i, j) = std::exp(log_u[i] + log_kernel(i, j) + log_v[j]);
    }
  }
  return {CouplingMatrix(std::move(plan), MarginalWeights(a), MarginalWeights(b)), it,
          violation, violation < cfg.tolerance, true};
}

}  // namespace detail

// Entropic OT: argmin <gamma, C> - epsilon * H(gamma) over couplings of (a, b).
// The result is diag(u) * exp(-C / epsilon) * diag(v); each sweep rescales
// rows then columns. Non-convergence is reported, not thrown.
inline SinkhornResult Sinkhorn(const CostMatrix& cost, const MarginalWeights& a,
                               const MarginalWeights& b, const SinkhornConfig& cfg = {}) {
  cfg.Validate();
  detail::Require(cost.rows() == a.size() && cost.cols() == b.size(),
                  "Sinkhorn: cost shape " + detail::Shape(cost.rows(), cost.cols()) +
                      " does not match marginals " + detail::Shape(a.size(), b.size()));
  if (cfg.UsesLogDomain()) {
    return detail::SinkhornLog(cost.entries(), a.values(), b.values(), cfg);
  }
  return detail::SinkhornScaling(cost.entries(), a.values(), b.values(), cfg);
}

// Temporal-order-preserved coupling: Sinkhorn on cos-cost + beta * d^2 with
// uniform marginals.
inline SinkhornResult TotCoupling(const FeatureSequence& h, const FeatureSequence& z,
                                  double beta, const SinkhornConfig& cfg = {}) {
  const CostMatrix cost = CombinedCostBeta(CosineCost(h, z), beta);
  return Sinkhorn(cost, MarginalWeights::Uniform(h.length()),
                  MarginalWeights::Uniform(z.length()), cfg);
}

// <gamma, C>
inline double OtObjective(const Matrix& gamma, const Matrix& cost) {
  detail::RequireSameShape(gamma, cost, "OtObjective");
  return gamma.cwiseProduct(cost).sum();
}
inline double OtObjective(const CouplingMatrix& gamma, const CostMatrix& cost) {
  return OtObjective(gamma.entries(), cost.entries());
}

// -sum gamma log gamma, with 0 log 0 = 0.
inline double Entropy(const Matrix& gamma) {
  detail::Require((gamma.array() >= 0.0).all(), "Entropy: entries must be >= 0");
  double h = 0.0;
  for (Index i = 0; i < gamma.size(); ++i) {
    const double g = gamma.data()[i];
    if (g > 0.0) h -= g * std::log(g);
  }
  return h;
}
inline double Entropy(const CouplingMatrix& gamma) { return Entropy(gamma.entries()); }

namespace detail {

inline double KlFromLogPrior(const Matrix& gamma, const Matrix& log_prior) {
  Require((gamma.array() >= 0.0).all(), "KlDivergence: coupling entries must be >= 0");
  double kl = 0.0;
  for (Index i = 0; i < gamma.size(); ++i) {
    const double g = gamma.data()[i];
    if (g > 0.0) kl += g * (std::log(g) - log_prior.data()[i]);
  }
  return kl;
}

}  // namespace detail

// sum gamma log(gamma / p); zero-mass cells contribute nothing.
inline double KlDivergence(const Matrix& gamma, const Matrix& prior) {
  detail::RequireSameShape(gamma, prior, "KlDivergence");
  detail::Require((prior.array() > 0.0).all(), "KlDivergence: prior entries must be > 0");
  return detail::KlFromLogPrior(gamma, prior.array().log().matrix());
}
inline double KlDivergence(const CouplingMatrix& gamma, const TemporalPrior& prior) {
  detail::RequireSameShape(gamma.entries(), prior.entries(), "KlDivergence");
  return detail::KlFromLogPrior(gamma.entries(), prior.log_entries());
}

// <gamma, C> - alpha1 H(gamma) + alpha2 KL(gamma || P)
inline double TotObjective(const Matrix& gamma, const Matrix& cost, const Matrix& prior,
                           double alpha1, double alpha2) {
  detail::RequireSameShape(gamma, cost, "TotObjective");
  detail::RequireSameShape(gamma, prior, "TotObjective");
  double value = OtObjective(gamma, cost);
  if (alpha1 != 0.0) value -= alpha1 * Entropy(gamma);
  if (alpha2 != 0.0) value += alpha2 * KlDivergence(gamma, prior);
  return value;
}
inline double TotObjective(const CouplingMatrix& gamma, const CostMatrix& cost,
                           const TemporalPrior& prior, double alpha1, double alpha2) {
  detail::RequireSameShape(gamma.entries(), cost.entries(), "TotObjective");
  double value = OtObjective(gamma, cost);
  if (alpha1 != 0.0) value -= alpha1 * Entropy(gamma);
  if (alpha2 != 0.0) value += alpha2 * KlDivergence(gamma, prior);
  return value;
}

// <gamma, d^2>: how far the transported mass sits from the temporal diagonal.
inline double TemporalSpread(const Matrix& gamma) {
  const Matrix d = TemporalDistance(gamma.rows(), gamma.cols());
  return gamma.cwiseProduct(d.cwiseProduct(d)).sum();
}

// Mass on cells with |i/la - j/lt| <= band (1-based positions).
inline double NearDiagonalMass(const Matrix& gamma, double band = 0.1) {
  const double la = static_cast<double>(gamma.rows());
  const double lt = static_cast<double>(gamma.cols());
  double mass = 0.0;
  for (Index i = 0; i < gamma.rows(); ++i) {
    for (Index j = 0; j < gamma.cols(); ++j) {
      if (std::abs(static_cast<double>(i + 1) / la - static_cast<double>(j + 1) / lt) <= band) {
        mass += gamma(i, j);
      }
    }
  }
  return mass;
}

}  // namespace totalign
