// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "discogan/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "discogan/dsp.hpp"

namespace discogan {

int64_t SpectralLossConfig::min_length() const {
  int64_t largest = 0;
  for (int64_t e : exponents) largest = std::max<int64_t>(largest, int64_t{1} << e);
  return largest;
}

torch::Tensor time_loss(const torch::Tensor& clean, const torch::Tensor& estimate) {
  if (clean.sizes() != estimate.sizes()) throw std::invalid_argument("time_loss: shape mismatch");
  return torch::abs(clean - estimate).mean();
}

namespace {

torch::Tensor l1_plus_rms(const torch::Tensor& a, const torch::Tensor& b) {
  auto diff = a - b;
  return diff.abs().mean() + diff.square().mean().sqrt();
}

}  // namespace

torch::Tensor freq_loss(const torch::Tensor& clean, const torch::Tensor& estimate, const SpectralLossConfig& cfg) {
  if (clean.sizes() != estimate.sizes()) throw std::invalid_argument("freq_loss: shape mismatch");
  if (cfg.exponents.empty()) throw std::invalid_argument("freq_loss: no resolutions");
  if (clean.size(-1) < cfg.min_length())
    throw std::invalid_argument("freq_loss: clip shorter than " + std::to_string(cfg.min_length()) + " samples");
  torch::Tensor total;
  for (int64_t e : cfg.exponents) {
    const int64_t win = int64_t{1} << e;
    auto term = l1_plus_rms(log_power_spectrogram(clean, win), log_power_spectrogram(estimate, win)) +
                l1_plus_rms(mel_spectrogram(clean, win, cfg.mels_for(win)),
                            mel_spectrogram(estimate, win, cfg.mels_for(win)));
    total = total.defined() ? total + term : term;
  }
  return total / static_cast<double>(cfg.exponents.size());
}

LossBreakdown total_gen_loss(const LossParts& p, const LossWeights& w) {
  const std::pair<const char*, double> named[] = {{"l_t", p.time}, {"l_f", p.freq}, {"l_adv", p.adv}, {"l_feat", p.feat}};
  for (const auto& [name, value] : named)
    if (!std::isfinite(value)) throw std::domain_error(std::string("non-finite loss term ") + name);
  LossBreakdown out;
  out.l_t = p.time;
  out.l_f = p.freq;
  out.l_adv = p.adv;
  out.l_feat = p.feat;
  out.total = w.time * p.time + w.freq * p.freq + w.adv * p.adv + w.feat * p.feat;
  return out;
}

torch::Tensor weighted_gen_loss(const torch::Tensor& l_t, const torch::Tensor& l_f, const torch::Tensor& l_adv,
                                const torch::Tensor& l_feat, const LossWeights& w) {
  return w.time * l_t + w.freq * l_f + w.adv * l_adv + w.feat * l_feat;
}

}  // namespace discogan
