// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "discogan/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "discogan/dsp.hpp"

namespace discogan {

MsStftConfig MsStftConfig::toy() {
  MsStftConfig c;
  c.scales = {1024, 512, 256};
  c.channels = 16;
  return c;
}

void to_json(nlohmann::json& j, const MsStftConfig& c) {
  j = {{"scales", c.scales}, {"channels", c.channels}, {"negative_slope", c.negative_slope}};
}

void from_json(const nlohmann::json& j, MsStftConfig& c) {
  c.scales = j.at("scales").get<std::vector<int64_t>>();
  c.channels = j.at("channels").get<int64_t>();
  c.negative_slope = j.at("negative_slope").get<double>();
}

StftCriticImpl::StftCriticImpl(int64_t fft_size, const MsStftConfig& cfg)
    : fft_size_(fft_size), slope_(cfg.negative_slope) {
  const int64_t ch = cfg.channels;
  convs_ = register_module("convs", torch::nn::ModuleList());
  convs_->push_back(WNConv2d(ConvSpec{2, ch, 3, 9, 1, 1}));
  convs_->push_back(WNConv2d(ConvSpec{ch, ch, 3, 9, 2, 1}));
  convs_->push_back(WNConv2d(ConvSpec{ch, ch, 3, 9, 2, 2}));
  convs_->push_back(WNConv2d(ConvSpec{ch, ch, 3, 9, 2, 4}));
  convs_->push_back(WNConv2d(ConvSpec{ch, 1, 3, 3, 1, 1}));
}

std::vector<torch::Tensor> StftCriticImpl::forward(const torch::Tensor& wav) {
  auto spec = stft(wav, {fft_size_, fft_size_ / 4}) / std::sqrt(static_cast<double>(fft_size_));
  auto x = torch::stack({torch::real(spec), torch::imag(spec)}, 1);  // [B, 2, T, F]
  std::vector<torch::Tensor> features;
  for (std::size_t i = 0; i < convs_->size(); ++i) {
    x = convs_[i]->as<WNConv2dImpl>()->forward(x);
    if (i + 1 < convs_->size()) x = torch::leaky_relu(x, slope_);
    features.push_back(x);
  }
  return features;
}

MsStftDiscriminatorImpl::MsStftDiscriminatorImpl(MsStftConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.scales.empty()) throw std::invalid_argument("msstft: no scales");
  critics_ = register_module("critics", torch::nn::ModuleList());
  for (int64_t n : cfg_.scales) critics_->push_back(StftCritic(n, cfg_));
}

DiscOutputs MsStftDiscriminatorImpl::forward(const torch::Tensor& wav_in) {
  auto wav = wav_in.dim() == 1 ? wav_in.unsqueeze(0) : wav_in;
  const int64_t largest = *std::max_element(cfg_.scales.begin(), cfg_.scales.end());
  if (wav.size(-1) < largest)
    throw std::invalid_argument("msstft: clip shorter than the largest window " + std::to_string(largest));
  DiscOutputs out;
  for (std::size_t k = 0; k < critics_->size(); ++k) {
    auto feats = critics_[k]->as<StftCriticImpl>()->forward(wav);
    out.logits.push_back(feats.back());
    out.features.push_back(std::move(feats));
  }
  return out;
}

torch::Tensor frame_logits(const torch::Tensor& logits) { return logits.mean(-1).squeeze(1); }

torch::Tensor gen_adv_loss(const DiscOutputs& fake) {
  if (fake.logits.empty()) throw std::invalid_argument("gen_adv_loss: no scales");
  torch::Tensor total;
  for (const auto& logits : fake.logits) {
    auto term = torch::relu(1.0 - frame_logits(logits)).mean(-1);  // [B]
    total = total.defined() ? total + term : term;
  }
  return (total / static_cast<double>(fake.logits.size())).mean();
}

torch::Tensor feat_match_loss(const DiscOutputs& real, const DiscOutputs& fake) {
  if (real.features.size() != fake.features.size() || real.features.empty())
    throw std::invalid_argument("feat_match_loss: scale count mismatch");
  const std::size_t layers = real.features.front().size();
  torch::Tensor total;
  for (std::size_t k = 0; k < real.features.size(); ++k) {
    if (real.features[k].size() != layers || fake.features[k].size() != layers)
      throw std::invalid_argument("feat_match_loss: layer count mismatch");
    for (std::size_t l = 0; l < layers; ++l) {
      const auto& a = real.features[k][l];
      const auto& b = fake.features[k][l];
      if (a.sizes() != b.sizes()) throw std::invalid_argument("feat_match_loss: feature shape mismatch");
      // [B, C, T, F] -> per-frame L1 over (C, F), then mean over T.
      auto term = torch::abs(a - b).sum({1, 3}).mean(-1);
      total = total.defined() ? total + term : term;
    }
  }
  return (total / static_cast<double>(real.features.size() * layers)).mean();
}

torch::Tensor disc_train_loss(const DiscOutputs& real, const DiscOutputs& fake) {
  if (real.logits.size() != fake.logits.size() || real.logits.empty())
    throw std::invalid_argument("disc_train_loss: scale count mismatch");
  torch::Tensor total;
  for (std::size_t k = 0; k < real.logits.size(); ++k) {
    auto term = torch::relu(1.0 - frame_logits(real.logits[k])).mean(-1) +
                torch::relu(1.0 + frame_logits(fake.logits[k])).mean(-1);
    total = total.defined() ? total + term : term;
  }
  return (total / static_cast<double>(real.logits.size())).mean();
}

}  // namespace discogan
