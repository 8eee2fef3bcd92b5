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

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "totalign/common.hpp"

namespace totalign {

// Negative log-likelihood of a label sequence under CTC. When no alignment of
// the labels fits in the available frames, `feasible` is false and `value`
// carries no meaning.
struct CtcLoss {
  bool feasible = false;
  double value = 0.0;
};

// Frames needed to emit `labels`: one per label plus a blank between repeats.
inline Index CtcMinFrames(std::span<const int> labels) {
  Index frames = static_cast<Index>(labels.size());
  for (std::size_t k = 1; k < labels.size(); ++k) {
    if (labels[k] == labels[k - 1]) ++frames;
  }
  return frames;
}

// Forward algorithm over the blank-augmented sequence
//   blank, l1, blank, l2, ..., lL, blank
// in log space. `log_probs` is T x V, one log-distribution per frame.
inline CtcLoss ComputeCtcLoss(const Matrix& log_probs, std::span<const int> labels,
                              int blank = 0) {
  const Index frames = log_probs.rows();
  const Index vocab = log_probs.cols();
  detail::Require(frames >= 1, "CtcLoss: need at least one frame");
  detail::Require(blank >= 0 && blank < vocab,
                  "CtcLoss: blank id " + std::to_string(blank) + " outside vocabulary");
  for (int id : labels) {
    detail::Require(id >= 0 && id < vocab,
                    "CtcLoss: label id " + std::to_string(id) + " outside vocabulary");
    detail::Require(id != blank, "CtcLoss: labels must not contain the blank id");
  }
  detail::Require((log_probs.array() < INFINITY).all() && !log_probs.hasNaN(),
                  "CtcLoss: log-probabilities must be finite or -inf");

  if (CtcMinFrames(labels) > frames) return {};

  const Index states = 2 * static_cast<Index>(labels.size()) + 1;
  std::vector<int> ext(static_cast<std::size_t>(states), blank);
  for (std::size_t k = 0; k < labels.size(); ++k) ext[2 * k + 1] = labels[k];

  std::vector<double> alpha(static_cast<std::size_t>(states), -INFINITY);
  std::vector<double> next(alpha.size());
  alpha[0] = log_probs(0, blank);
  if (states > 1) alpha[1] = log_probs(0, ext[1]);

  for (Index t = 1; t < frames; ++t) {
    for (Index s = 0; s < states; ++s) {
      const auto us = static_cast<std::size_t>(s);
      double acc = alpha[us];
      if (s >= 1) acc = detail::LogAdd(acc, alpha[us - 1]);
      if (s >= 2 && ext[us] != blank && ext[us] != ext[us - 2]) {
        acc = detail::LogAdd(acc, alpha[us - 2]);
      }
      next[us] = acc == -INFINITY ? -INFINITY : acc + log_probs(t, ext[us]);
    }
    alpha.swap(next);
  }

  double total = alpha[static_cast<std::size_t>(states - 1)];
  if (states > 1) total = detail::LogAdd(total, alpha[static_cast<std::size_t>(states - 2)]);
  if (total == -INFINITY) return {};
  // -log p can round to a tiny negative when p == 1.
  return {true, std::max(0.0, -total)};
}

}  // namespace totalign
