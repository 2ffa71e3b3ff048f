// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Multi-scale STFT discriminator and the hinge / feature-matching objectives.

#pragma once

#include <torch/torch.h>

#include <vector>

#include <json.hpp>

#include "discogan/layers.hpp"

namespace discogan {

struct MsStftConfig {
  std::vector<int64_t> scales{2048, 1024, 512, 256, 128};  // FFT sizes, hop = size / 4
  int64_t channels = 32;
  double negative_slope = 0.2;

  int64_t layers() const { return 5; }
  static MsStftConfig paper() { return {}; }
  static MsStftConfig toy();
};

void to_json(nlohmann::json& j, const MsStftConfig& c);
void from_json(const nlohmann::json& j, MsStftConfig& c);

/// Per scale k: logits[k] is [B, 1, T_k, F'_k] and features[k] holds the L
/// layer outputs (the last one is the logit map itself).
struct DiscOutputs {
  std::vector<torch::Tensor> logits;
  std::vector<std::vector<torch::Tensor>> features;
};

/// One scale: STFT -> (real, imag) channels -> five weight-normalized convs.
class StftCriticImpl : public torch::nn::Module {
 public:
  StftCriticImpl(int64_t fft_size, const MsStftConfig& cfg);
  std::vector<torch::Tensor> forward(const torch::Tensor& wav);

 private:
  int64_t fft_size_;
  double slope_;
  torch::nn::ModuleList convs_;
};
TORCH_MODULE(StftCritic);

class MsStftDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit MsStftDiscriminatorImpl(MsStftConfig cfg);
  /// [B, N] waveform; N must be at least the largest FFT size.
  DiscOutputs forward(const torch::Tensor& wav);
  const MsStftConfig& config() const { return cfg_; }

 private:
  MsStftConfig cfg_;
  torch::nn::ModuleList critics_;
};
TORCH_MODULE(MsStftDiscriminator);

/// D_{k,t}: the logit map of scale k averaged over frequency, [B, T_k].
torch::Tensor frame_logits(const torch::Tensor& logits);

/// (1/K) sum_k (1/T_k) sum_t max(0, 1 - D_{k,t}(fake)), averaged over the batch.
torch::Tensor gen_adv_loss(const DiscOutputs& fake);

/// (1/(K L)) sum_{k,l} (1/T_k) sum_t |D^l_{k,t}(real) - D^l_{k,t}(fake)|_1 where
/// the per-frame norm sums channels x frequency; averaged over the batch.
torch::Tensor feat_match_loss(const DiscOutputs& real, const DiscOutputs& fake);

/// (1/K) sum_k (1/T_k) sum_t [max(0, 1 - D(real)) + max(0, 1 + D(fake))].
torch::Tensor disc_train_loss(const DiscOutputs& real, const DiscOutputs& fake);

}  // namespace discogan
