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

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace totalign {

// Dense row-major storage; row i of a sequence matrix is the feature vector at
// temporal position i.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Raised when inputs violate a documented precondition (shape, range, sign).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when the unstabilized solver overflows or produces non-finite values.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void Require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

inline std::string Shape(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

inline void RequireSameShape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch " +
                          Shape(a.rows(), a.cols()) + " vs " +
                          Shape(b.rows(), b.cols()));
  }
}

inline bool AllFinite(const Matrix& m) { return m.array().isFinite().all(); }

// log(sum(exp(x))) over a strided range, robust to -inf entries.
template <typename Expr>
double LogSumExp(const Expr& x) {
  const double max_val = x.maxCoeff();
  if (!std::isfinite(max_val)) return max_val;
  return max_val + std::log((x.array() - max_val).exp().sum());
}

inline double LogAdd(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

}  // namespace detail
}  // namespace totalign
