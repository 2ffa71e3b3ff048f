// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Reconstruction losses and the weighted generator objective.

#pragma once

#include <torch/torch.h>

#include <algorithm>
#include <cstdint>
#include <vector>

namespace discogan {

struct SpectralLossConfig {
  std::vector<int64_t> exponents{5, 6, 7, 8, 9, 10};  // windows 2^i, hops 2^i / 4
  int64_t n_mels = 64;                                // capped at window / 2

  int64_t mels_for(int64_t window) const { return std::min(n_mels, window / 2); }
  int64_t min_length() const;
};

struct LossWeights {
  double time = 1.0;
  double freq = 1.0;
  double adv = 1.0 / 9.0;
  double feat = 100.0 / 9.0;
};

struct LossParts {
  double time = 0.0;
  double freq = 0.0;
  double adv = 0.0;
  double feat = 0.0;
};

struct LossBreakdown {
  double l_t = 0.0;
  double l_f = 0.0;
  double l_adv = 0.0;
  double l_feat = 0.0;
  double total = 0.0;
};

/// Mean absolute error over samples (and batch rows).
torch::Tensor time_loss(const torch::Tensor& clean, const torch::Tensor& estimate);

/// Mean over resolutions of L1 + RMS distances between log-power and log-Mel
/// spectra. Inputs are [N] or [B, N] with N >= the largest window.
torch::Tensor freq_loss(const torch::Tensor& clean, const torch::Tensor& estimate,
                        const SpectralLossConfig& cfg = {});

/// The weighted sum, evaluated in double precision. Throws std::domain_error
/// naming the first non-finite part.
LossBreakdown total_gen_loss(const LossParts& parts, const LossWeights& weights = {});

/// The same weighted sum on autograd tensors, for the backward pass.
torch::Tensor weighted_gen_loss(const torch::Tensor& l_t, const torch::Tensor& l_f, const torch::Tensor& l_adv,
                                const torch::Tensor& l_feat, const LossWeights& weights = {});

}  // namespace discogan
