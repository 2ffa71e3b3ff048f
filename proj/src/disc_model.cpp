// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "discogan/disc_model.hpp"

#include <cmath>
#include <stdexcept>

namespace discogan {

DiscModelConfig DiscModelConfig::toy() {
  DiscModelConfig c;
  c.channels = {8, 16, 16, 32};
  c.hidden = 64;
  return c;
}

void to_json(nlohmann::json& j, const DiscModelConfig& c) {
  j = {{"channels", c.channels},
       {"hidden", c.hidden},
       {"lstm_layers", c.lstm_layers},
       {"stft", {{"window_size", c.stft.window_size}, {"hop", c.stft.hop}}}};
}

void from_json(const nlohmann::json& j, DiscModelConfig& c) {
  c.channels = j.at("channels").get<std::vector<int64_t>>();
  c.hidden = j.at("hidden").get<int64_t>();
  c.lstm_layers = j.at("lstm_layers").get<int64_t>();
  c.stft.window_size = j.at("stft").at("window_size").get<int64_t>();
  c.stft.hop = j.at("stft").at("hop").get<int64_t>();
}

DiscModelImpl::DiscModelImpl(DiscModelConfig cfg) : cfg_(std::move(cfg)) {
  const auto n = static_cast<int64_t>(cfg_.channels.size());
  if (n == 0) throw std::invalid_argument("DiscModel: empty channel list");
  if (kUsedBins % (int64_t{1} << n) != 0) throw std::invalid_argument("DiscModel: too many blocks for 256 bins");
  bottleneck_bins_ = kUsedBins >> n;

  enc_convs_ = register_module("enc_convs", torch::nn::ModuleList());
  enc_norms_ = register_module("enc_norms", torch::nn::ModuleList());
  enc_acts_ = register_module("enc_acts", torch::nn::ModuleList());
  int64_t in = 2;
  for (int64_t c : cfg_.channels) {
    enc_convs_->push_back(CausalConv2d(ConvSpec{in, c, 2, 4, 2, 1}));
    enc_norms_->push_back(ChannelNorm(c));
    enc_acts_->push_back(torch::nn::PReLU(torch::nn::PReLUOptions().num_parameters(c)));
    in = c;
  }

  const int64_t flat = cfg_.channels.back() * bottleneck_bins_;
  in_proj_ = register_module("in_proj", torch::nn::Linear(flat, cfg_.hidden));
  lstm_ = register_module("lstm", torch::nn::LSTM(torch::nn::LSTMOptions(cfg_.hidden, cfg_.hidden)
                                                      .num_layers(cfg_.lstm_layers)
                                                      .batch_first(true)));
  out_proj_ = register_module("out_proj", torch::nn::Linear(cfg_.hidden, flat));

  dec_convs_ = register_module("dec_convs", torch::nn::ModuleList());
  dec_norms_ = register_module("dec_norms", torch::nn::ModuleList());
  dec_acts_ = register_module("dec_acts", torch::nn::ModuleList());
  for (int64_t i = n - 1; i >= 0; --i) {
    const int64_t out = i > 0 ? cfg_.channels[i - 1] : 2;
    dec_convs_->push_back(CausalConvTranspose2d(ConvSpec{2 * cfg_.channels[i], out, 2, 4, 2, 1}));
    if (i > 0) {
      dec_norms_->push_back(ChannelNorm(out));
      dec_acts_->push_back(torch::nn::PReLU(torch::nn::PReLUOptions().num_parameters(out)));
    }
  }
}

DiscForward DiscModelImpl::forward(const torch::Tensor& noisy_in) {
  auto noisy = noisy_in.dim() == 1 ? noisy_in.unsqueeze(0) : noisy_in;
  if (!torch::isfinite(noisy).all().item<bool>()) throw std::invalid_argument("DiscModel: non-finite input");
  const int64_t length = noisy.size(-1);
  auto spec = stft(noisy, cfg_.stft);  // [B, T, 257]
  auto used = spec.narrow(-1, 0, kUsedBins);
  auto x = torch::stack({torch::real(used), torch::imag(used)}, 1);  // [B, 2, T, 256]

  std::vector<torch::Tensor> skips;
  for (std::size_t i = 0; i < enc_convs_->size(); ++i) {
    x = enc_convs_[i]->as<CausalConv2dImpl>()->forward(x);
    x = enc_norms_[i]->as<ChannelNormImpl>()->forward(x);
    x = enc_acts_[i]->as<torch::nn::PReLUImpl>()->forward(x);
    skips.push_back(x);
  }

  const int64_t b = x.size(0), c = x.size(1), t = x.size(2), f = x.size(3);
  auto seq = in_proj_(x.permute({0, 2, 1, 3}).reshape({b, t, c * f}));
  auto latents = std::get<0>(lstm_(seq));
  x = out_proj_(latents).reshape({b, t, c, f}).permute({0, 2, 1, 3});

  for (std::size_t j = 0; j < dec_convs_->size(); ++j) {
    const auto& skip = skips[skips.size() - 1 - j];
    x = dec_convs_[j]->as<CausalConvTranspose2dImpl>()->forward(torch::cat({x, skip}, 1));
    if (j < dec_norms_->size()) {
      x = dec_norms_[j]->as<ChannelNormImpl>()->forward(x);
      x = dec_acts_[j]->as<torch::nn::PReLUImpl>()->forward(x);
    }
  }
  // The Nyquist bin reuses the mask of the highest kept bin.
  auto mask = torch::complex(x.select(1, 0), x.select(1, 1));
  mask = torch::cat({mask, mask.narrow(-1, kUsedBins - 1, 1)}, -1);
  auto enhanced = istft(spec * mask, cfg_.stft, length);
  return {enhanced, latents, mask};
}

torch::Tensor si_sdr_batch(const torch::Tensor& reference, const torch::Tensor& estimate) {
  if (reference.sizes() != estimate.sizes()) throw std::invalid_argument("si_sdr: shape mismatch");
  auto ref = reference.dim() == 1 ? reference.unsqueeze(0) : reference;
  auto est = estimate.dim() == 1 ? estimate.unsqueeze(0) : estimate;
  auto ref_energy = (ref * ref).sum(-1, true);
  if ((ref_energy <= 0).any().item<bool>()) throw std::invalid_argument("si_sdr: silent reference");
  auto alpha = (ref * est).sum(-1, true) / ref_energy;
  auto target = alpha * ref;
  auto residual = est - target;
  auto num = (target * target).sum(-1);
  auto den = (residual * residual).sum(-1);
  // Bounding each side by 1e-10 of the other caps the ratio at +-100 dB.
  auto top = torch::clamp_min(torch::maximum(num, 1e-10 * den), 1e-20);
  auto bottom = torch::clamp_min(torch::maximum(den, 1e-10 * num), 1e-20);
  return 10.0 * torch::log10(top / bottom);
}

double train_disc_step(DiscModel& model, torch::optim::Optimizer& optimizer, const torch::Tensor& noisy,
                       const torch::Tensor& clean) {
  model->train();
  auto out = model->forward(noisy);
  auto loss = -si_sdr_batch(clean, out.enhanced).mean();
  const double value = loss.item<double>();
  if (!std::isfinite(value)) throw std::runtime_error("train_disc_step: non-finite loss (diverged)");
  optimizer.zero_grad();
  loss.backward();
  optimizer.step();
  return value;
}

FrozenDiscModel::FrozenDiscModel(DiscModel model) : model_(std::move(model)) {
  model_->eval();
  for (auto& p : model_->parameters()) {
    p.set_requires_grad(false);
    p.mutable_grad() = torch::Tensor();
  }
  fingerprint_ = discogan::fingerprint(*model_);
}

DiscForward FrozenDiscModel::forward(const torch::Tensor& noisy) const {
  torch::NoGradGuard no_grad;
  return model_.ptr()->forward(noisy);
}

std::string FrozenDiscModel::current_fingerprint() const { return discogan::fingerprint(*model_); }

FrozenDiscModel freeze(DiscModel model) { return FrozenDiscModel(std::move(model)); }

Checkpoint disc_model_checkpoint(const DiscModel& model, nlohmann::json extra_meta) {
  Checkpoint ckpt;
  ckpt.meta = std::move(extra_meta);
  ckpt.meta["kind"] = "disc_model";
  ckpt.meta["config"] = model->config();
  ckpt.meta["fingerprint"] = fingerprint(*model);
  export_module(*model, "model.", ckpt);
  return ckpt;
}

void save_disc_model(const std::filesystem::path& path, const DiscModel& model, nlohmann::json extra_meta) {
  save_checkpoint(path, disc_model_checkpoint(model, std::move(extra_meta)));
}

DiscModel disc_model_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.meta.value("kind", "") != "disc_model")
    throw std::runtime_error("checkpoint does not hold a discriminative model");
  DiscModel model(ckpt.meta.at("config").get<DiscModelConfig>());
  import_module(*model, "model.", ckpt);
  if (fingerprint(*model) != ckpt.meta.at("fingerprint").get<std::string>())
    throw std::runtime_error("disc model checkpoint fingerprint mismatch");
  return model;
}

DiscModel load_disc_model(const std::filesystem::path& path) {
  return disc_model_from_checkpoint(load_checkpoint(path));
}

}  // namespace discogan
