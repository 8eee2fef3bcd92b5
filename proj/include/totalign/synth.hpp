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

// Seeded synthetic acoustic/linguistic pairs with a known monotone
// correspondence.
//
// Generator (portable; fixtures reproduce across implementations):
//   engine   std::mt19937_64 seeded with the 64-bit seed (the engine is fully
//            specified by the C++ standard)
//   uniform  U = (next() >> 11) * 2^-53, in [0, 1)
//   normal   N = sqrt(-2 ln(1 - U1)) * cos(2 pi U2), two uniforms per normal
//   integer  lo + floor(U * (hi - lo + 1))
// Draw order: linguistic rows (row-major), acoustic noise (row-major), interior
// label ids, then adapter weights (fc3, fc1; row-major weight then bias).

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "totalign/common.hpp"
#include "totalign/geometry.hpp"
#include "totalign/transfer.hpp"

namespace totalign {

class SeededGenerator {
 public:
  explicit SeededGenerator(std::uint64_t seed) : engine_(seed) {}

  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double Normal() {
    const double u1 = Uniform();
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [lo, hi].
  std::int64_t Integer(std::int64_t lo, std::int64_t hi) {
    const double span = static_cast<double>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(std::floor(Uniform() * span));
  }

  Matrix NormalMatrix(Index rows, Index cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) m(i, j) = scale * Normal();
    }
    return m;
  }

 private:
  std::mt19937_64 engine_;
};

struct SynthOptions {
  Index length_a = 40;
  Index length_t = 20;
  Index dim = 16;
  std::uint64_t seed = 1;
  // Off: identity correspondence (lengths must match). On: uniform monotone
  // stretch, frame i -> token ceil(i * length_t / length_a), 1-based.
  bool warp = false;
  double noise = 0.1;
  int vocab = 8;
};

struct SynthPair {
  FeatureSequence acoustic;
  FeatureSequence linguistic;
  TokenSequence labels;
  // 0-based token index for each acoustic frame.
  std::vector<Index> correspondence;
  AdapterWeights weights;
};

inline std::vector<Index> MonotoneStretch(Index length_a, Index length_t) {
  std::vector<Index> map(static_cast<std::size_t>(length_a));
  for (Index i = 1; i <= length_a; ++i) {
    // ceil(i * lt / la) - 1
    map[static_cast<std::size_t>(i - 1)] = (i * length_t + length_a - 1) / length_a - 1;
  }
  return map;
}

// fc2 is the identity so the OT branch sees the acoustic rows unchanged;
// fc3 and fc1 are Gaussian with variance 1/fan_in; layer norms are identity.
inline AdapterWeights RandomAdapterWeights(SeededGenerator& gen, Index dim, int vocab,
                                           double s = 1.0) {
  detail::Require(dim >= 1 && vocab >= 2, "RandomAdapterWeights: need dim >= 1 and vocab >= 2");
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  AdapterWeights w;
  w.fc2 = {Matrix::Identity(dim, dim), Vector::Zero(dim)};
  w.fc3.weight = gen.NormalMatrix(dim, dim, scale);
  w.fc3.bias = gen.NormalMatrix(dim, 1, scale).col(0);
  w.fc1.weight = gen.NormalMatrix(vocab, dim, scale);
  w.fc1.bias = gen.NormalMatrix(vocab, 1, scale).col(0);
  w.ln_projected = LayerNormParams::Identity(dim);
  w.ln_fused = LayerNormParams::Identity(dim);
  w.s = s;
  return w;
}

inline SynthPair Synthesize(const SynthOptions& opt) {
  detail::Require(opt.length_a >= 1 && opt.length_t >= 1 && opt.dim >= 1,
                  "Synthesize: lengths and dim must be >= 1");
  detail::Require(opt.warp || opt.length_a == opt.length_t,
                  "Synthesize: without warp the lengths must be equal");
  detail::Require(opt.noise >= 0.0 && std::isfinite(opt.noise), "Synthesize: noise must be >= 0");
  detail::Require(opt.vocab >= 2, "Synthesize: vocab must be >= 2");

  SeededGenerator gen(opt.seed);
  Matrix linguistic = gen.NormalMatrix(opt.length_t, opt.dim);
  std::vector<Index> corr = MonotoneStretch(opt.length_a, opt.length_t);

  Matrix acoustic(opt.length_a, opt.dim);
  for (Index i = 0; i < opt.length_a; ++i) {
    acoustic.row(i) = linguistic.row(corr[static_cast<std::size_t>(i)]);
    for (Index k = 0; k < opt.dim; ++k) {
      const double n = gen.Normal();
      acoustic(i, k) += opt.noise * n;
    }
  }

  std::vector<int> ids{TokenSequence::kDefaultCls};
  for (Index j = 0; j + 2 < opt.length_t; ++j) {
    ids.push_back(static_cast<int>(gen.Integer(1, opt.vocab - 1)));
  }
  ids.push_back(TokenSequence::kDefaultSep);
  if (opt.length_t < 2) ids = {TokenSequence::kDefaultCls, TokenSequence::kDefaultSep};

  AdapterWeights weights = RandomAdapterWeights(gen, opt.dim, opt.vocab);
  return {FeatureSequence(std::move(acoustic), "acoustic"),
          FeatureSequence(std::move(linguistic), "linguistic"), TokenSequence(std::move(ids)),
          std::move(corr), std::move(weights)};
}

}  // namespace totalign
