// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Discriminative complex-ratio-mask enhancer. It is pre-trained on its own
// and then frozen; the output sequence of its last recurrent layer is the
// latent stream that conditions the generator.

#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "discogan/checkpoint.hpp"
#include "discogan/dsp.hpp"
#include "discogan/layers.hpp"

namespace discogan {

struct DiscModelConfig {
  std::vector<int64_t> channels{16, 32, 64, 128, 256, 256};
  int64_t hidden = 256;  // recurrent width and latent width D_d
  int64_t lstm_layers = 2;
  StftConfig stft;

  int64_t latent_dim() const { return hidden; }
  static DiscModelConfig paper() { return {}; }
  static DiscModelConfig toy();
};

void to_json(nlohmann::json& j, const DiscModelConfig& c);
void from_json(const nlohmann::json& j, DiscModelConfig& c);

struct DiscForward {
  torch::Tensor enhanced;  // [B, N]
  torch::Tensor latents;   // [B, T, D_d]
  torch::Tensor mask;      // [B, T, 257] complex
};

class DiscModelImpl : public torch::nn::Module {
 public:
  explicit DiscModelImpl(DiscModelConfig cfg);

  /// [B, N] or [N] noisy waveform.
  DiscForward forward(const torch::Tensor& noisy);
  const DiscModelConfig& config() const { return cfg_; }

 private:
  DiscModelConfig cfg_;
  int64_t bottleneck_bins_;
  torch::nn::ModuleList enc_convs_, enc_norms_, enc_acts_;
  torch::nn::ModuleList dec_convs_, dec_norms_, dec_acts_;
  torch::nn::Linear in_proj_{nullptr}, out_proj_{nullptr};
  torch::nn::LSTM lstm_{nullptr};
};
TORCH_MODULE(DiscModel);

/// Scale-invariant SDR per batch row in dB, bounded to [-100, 100]; differentiable.
torch::Tensor si_sdr_batch(const torch::Tensor& reference, const torch::Tensor& estimate);

/// One optimizer step on the batch-mean negative SI-SDR. Returns the loss
/// before the step; throws on a non-finite loss.
double train_disc_step(DiscModel& model, torch::optim::Optimizer& optimizer, const torch::Tensor& noisy,
                       const torch::Tensor& clean);

/// Inference-only view of a trained DiscModel. Parameters have gradients
/// disabled and the content fingerprint is captured at construction.
class FrozenDiscModel {
 public:
  explicit FrozenDiscModel(DiscModel model);

  DiscForward forward(const torch::Tensor& noisy) const;
  const std::string& fingerprint() const { return fingerprint_; }
  std::string current_fingerprint() const;
  const DiscModelConfig& config() const { return model_->config(); }
  /// Read-only access for inspection (e.g. asserting that no gradients exist).
  const DiscModel& model() const { return model_; }

 private:
  DiscModel model_;
  std::string fingerprint_;
};

FrozenDiscModel freeze(DiscModel model);

Checkpoint disc_model_checkpoint(const DiscModel& model, nlohmann::json extra_meta = nlohmann::json::object());
void save_disc_model(const std::filesystem::path& path, const DiscModel& model,
                     nlohmann::json extra_meta = nlohmann::json::object());
DiscModel disc_model_from_checkpoint(const Checkpoint& ckpt);
DiscModel load_disc_model(const std::filesystem::path& path);

}  // namespace discogan
