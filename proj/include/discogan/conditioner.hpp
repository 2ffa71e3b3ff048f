// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Fuses the frozen model's latents into the generator latents with masked
// multi-head cross-attention: generator features are the queries, projected
// discriminative features the keys and values. Query frame t may attend to
// every past frame and up to `lookahead` future frames.

#pragma once

#include <torch/torch.h>

#include <cstdint>

#include <json.hpp>

namespace discogan {

struct AttentionConfig {
  int64_t heads = 2;
  int64_t model_dim = 128;
  int64_t lookahead = 20;
};

void to_json(nlohmann::json& j, const AttentionConfig& c);
void from_json(const nlohmann::json& j, AttentionConfig& c);

/// allowed[t][t'] is true iff t' <= t + lookahead. Bool tensor [T, T].
torch::Tensor build_lookahead_mask(int64_t frames, int64_t lookahead);

/// Value added to the scores of disallowed positions before the softmax.
inline constexpr double kMaskedScore = -1e9;

class MaskedMultiHeadAttentionImpl : public torch::nn::Module {
 public:
  explicit MaskedMultiHeadAttentionImpl(AttentionConfig cfg);

  /// query, kv: [B, T, model_dim] -> [B, T, model_dim]. When `weights` is
  /// non-null it receives the softmax weights [B, heads, T, T].
  torch::Tensor forward(const torch::Tensor& query, const torch::Tensor& kv, torch::Tensor* weights = nullptr);

  const AttentionConfig& config() const { return cfg_; }

  torch::nn::Linear q_proj{nullptr}, k_proj{nullptr}, v_proj{nullptr}, out_proj{nullptr};

 private:
  AttentionConfig cfg_;
};
TORCH_MODULE(MaskedMultiHeadAttention);

class ConditionerImpl : public torch::nn::Module {
 public:
  ConditionerImpl(int64_t disc_latent_dim, AttentionConfig cfg);

  /// Frame-wise affine map [B, T, D_d] -> [B, T, model_dim].
  torch::Tensor project_latents(const torch::Tensor& disc_latents);

  /// z_l = concat(g_l, attention(g_l, project(d_l))) along features:
  /// [B, T, C_l] x [B, T, D_d] -> [B, T, 2 C_l].
  torch::Tensor forward(const torch::Tensor& gen_latents, const torch::Tensor& disc_latents);

  torch::nn::Linear project{nullptr};
  MaskedMultiHeadAttention attention{nullptr};
};
TORCH_MODULE(Conditioner);

}  // namespace discogan
