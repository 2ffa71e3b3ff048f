// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "discogan/conditioner.hpp"

#include <cmath>
#include <stdexcept>

namespace discogan {

void to_json(nlohmann::json& j, const AttentionConfig& c) {
  j = {{"heads", c.heads}, {"model_dim", c.model_dim}, {"lookahead", c.lookahead}};
}

void from_json(const nlohmann::json& j, AttentionConfig& c) {
  c.heads = j.at("heads").get<int64_t>();
  c.model_dim = j.at("model_dim").get<int64_t>();
  c.lookahead = j.at("lookahead").get<int64_t>();
}

torch::Tensor build_lookahead_mask(int64_t frames, int64_t lookahead) {
  if (frames < 1) throw std::invalid_argument("build_lookahead_mask: need at least one frame");
  if (lookahead < 0) throw std::invalid_argument("build_lookahead_mask: negative lookahead");
  auto rows = torch::arange(frames).unsqueeze(1);
  auto cols = torch::arange(frames).unsqueeze(0);
  return cols <= rows + lookahead;
}

MaskedMultiHeadAttentionImpl::MaskedMultiHeadAttentionImpl(AttentionConfig cfg) : cfg_(cfg) {
  if (cfg_.heads < 1 || cfg_.model_dim % cfg_.heads != 0)
    throw std::invalid_argument("attention: model_dim must be divisible by heads");
  q_proj = register_module("q_proj", torch::nn::Linear(cfg_.model_dim, cfg_.model_dim));
  k_proj = register_module("k_proj", torch::nn::Linear(cfg_.model_dim, cfg_.model_dim));
  v_proj = register_module("v_proj", torch::nn::Linear(cfg_.model_dim, cfg_.model_dim));
  out_proj = register_module("out_proj", torch::nn::Linear(cfg_.model_dim, cfg_.model_dim));
}

torch::Tensor MaskedMultiHeadAttentionImpl::forward(const torch::Tensor& query, const torch::Tensor& kv,
                                                    torch::Tensor* weights) {
  if (query.dim() != 3 || kv.dim() != 3) throw std::invalid_argument("attention: expected [B, T, D] inputs");
  if (query.size(1) != kv.size(1)) throw std::invalid_argument("attention: query/key frame counts differ");
  const int64_t b = query.size(0), t = query.size(1);
  const int64_t h = cfg_.heads, dh = cfg_.model_dim / cfg_.heads;

  auto split = [&](const torch::Tensor& x) { return x.reshape({b, t, h, dh}).transpose(1, 2); };
  auto q = split(q_proj(query));
  auto k = split(k_proj(kv));
  auto v = split(v_proj(kv));

  auto scores = torch::matmul(q, k.transpose(-1, -2)) / std::sqrt(static_cast<double>(dh));
  auto allowed = build_lookahead_mask(t, cfg_.lookahead).to(scores.device());
  scores = scores.masked_fill(allowed.logical_not(), kMaskedScore);
  auto attn = torch::softmax(scores, -1);
  if (weights) *weights = attn;
  auto heads = torch::matmul(attn, v).transpose(1, 2).reshape({b, t, cfg_.model_dim});
  return out_proj(heads);
}

ConditionerImpl::ConditionerImpl(int64_t disc_latent_dim, AttentionConfig cfg) {
  project = register_module("project", torch::nn::Linear(disc_latent_dim, cfg.model_dim));
  attention = register_module("attention", MaskedMultiHeadAttention(cfg));
}

torch::Tensor ConditionerImpl::project_latents(const torch::Tensor& disc_latents) { return project(disc_latents); }

torch::Tensor ConditionerImpl::forward(const torch::Tensor& gen_latents, const torch::Tensor& disc_latents) {
  if (gen_latents.size(1) != disc_latents.size(1))
    throw std::invalid_argument("conditioner: generator and disc latent frame counts differ");
  auto conditioned = attention(gen_latents, project_latents(disc_latents));
  return torch::cat({gen_latents, conditioned}, -1);
}

}  // namespace discogan
