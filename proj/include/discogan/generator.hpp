// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Time-frequency U-Net style generator.
//
//   x -> stft -> compress -> encoder -> g_l --(conditioner, d_l)--> z_l
//     -> decoder (FiLM from encoder skips) -> (m, cos, sin) -> decompress -> istft
//
// Down-sampling happens only along frequency, so every feature map keeps the
// STFT frame count T. Time-axis convolutions are causal.

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "discogan/checkpoint.hpp"
#include "discogan/conditioner.hpp"
#include "discogan/disc_model.hpp"
#include "discogan/dsp.hpp"
#include "discogan/layers.hpp"

namespace discogan {

enum class Conditioning { kDiscriminative, kNone };

std::string to_string(Conditioning c);
Conditioning parse_conditioning(const std::string& name);

struct GeneratorConfig {
  int64_t base_channels = 32;    // C
  int64_t blocks = 8;            // B
  int64_t latent_channels = 128;  // C_l
  int64_t max_channels = 512;
  int64_t lstm_units = 512;
  int64_t lstm_layers = 2;
  int64_t film_reduction = 8;
  bool use_film = true;
  Conditioning conditioning = Conditioning::kDiscriminative;
  int64_t disc_latent_dim = 256;  // D_d of the frozen model
  AttentionConfig attention;      // model_dim follows latent_channels
  StftConfig stft;

  /// Channels entering block b (also the skip channels of block b).
  int64_t block_in_channels(int64_t b) const;
  /// Channels after the down-sampling conv of block b.
  int64_t block_out_channels(int64_t b) const;
  std::vector<int64_t> channel_schedule() const;
  int64_t bottleneck_bins() const { return kUsedBins >> blocks; }
  int64_t bottleneck_width() const { return block_out_channels(blocks - 1) * bottleneck_bins(); }
  void validate() const;

  static GeneratorConfig paper() { return {}; }
  static GeneratorConfig toy();
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);

/// x + conv(act(norm(conv(act(norm(x)))))) with two (3, 3) kernels.
class ResidualUnitImpl : public torch::nn::Module {
 public:
  explicit ResidualUnitImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ChannelNorm norm1_{nullptr}, norm2_{nullptr};
  CausalConv2d conv1_{nullptr}, conv2_{nullptr};
};
TORCH_MODULE(ResidualUnit);

struct FilmFactors {
  torch::Tensor gamma;      // ReLU(conv(e)) >= 0
  torch::Tensor beta;       // Sigmoid(conv(e)) in (0, 1)
  torch::Tensor attention;  // Sigmoid(conv(ReLU(conv(e)))) in (0, 1)
};

/// d + ((gamma * A) * d + beta * A)
torch::Tensor film_combine(const torch::Tensor& decoded, const torch::Tensor& gamma, const torch::Tensor& beta,
                           const torch::Tensor& attention);

/// Residual FiLM layer conditioning a decoder feature map on the encoder skip
/// of the same resolution. All convs use (1, 3) kernels.
class FilmImpl : public torch::nn::Module {
 public:
  FilmImpl(int64_t channels, int64_t reduction);
  FilmFactors factors(const torch::Tensor& skip);
  torch::Tensor forward(const torch::Tensor& decoded, const torch::Tensor& skip);

  CausalConv2d gamma_conv{nullptr}, beta_conv{nullptr}, attn_reduce{nullptr}, attn_restore{nullptr};
};
TORCH_MODULE(Film);

struct EncoderState {
  torch::Tensor latents;             // g_l [B, T, C_l]
  std::vector<torch::Tensor> skips;  // B maps, skips[b] is [B, C_b, T, 256 / 2^b]
};

class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(const GeneratorConfig& cfg);
  /// [B, 2, T, 256] compressed image -> EncoderState.
  EncoderState forward(const torch::Tensor& image);

 private:
  GeneratorConfig cfg_;
  CausalConv2d input_conv_{nullptr};
  torch::nn::ModuleList residuals_, down_norms_, down_convs_;
  ChannelNorm bottleneck_norm_{nullptr};
  torch::nn::LSTM lstm_{nullptr};
  torch::nn::Linear latent_proj_{nullptr};
};
TORCH_MODULE(Encoder);

class DecoderImpl : public torch::nn::Module {
 public:
  explicit DecoderImpl(const GeneratorConfig& cfg);
  /// z_l [B, T, 2 C_l] and the encoder skips -> [B, 3, T, 256].
  torch::Tensor forward(const torch::Tensor& latents, const std::vector<torch::Tensor>& skips);

  /// FiLM layer used at block b, or nullptr when FiLM is disabled.
  Film film(int64_t block) const;

 private:
  GeneratorConfig cfg_;
  torch::nn::Linear entry_{nullptr};
  torch::nn::ModuleList up_norms_, up_convs_, films_, residuals_;
  ChannelNorm output_norm_{nullptr};
  CausalConv2d output_conv_{nullptr};
};
TORCH_MODULE(Decoder);

struct GeneratorTrace {
  torch::Tensor enhanced;  // [B, N]
  torch::Tensor image;     // [B, 3, T, 256]
  torch::Tensor latents;   // g_l
  torch::Tensor fused;     // z_l
};

class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(GeneratorConfig cfg);

  EncoderState encode(const torch::Tensor& image);
  /// z_l from g_l. With discriminative conditioning `disc_latents` is required;
  /// without it the second half of z_l is zero.
  torch::Tensor fuse(const torch::Tensor& gen_latents, const std::optional<torch::Tensor>& disc_latents);
  torch::Tensor decode(const torch::Tensor& fused, const std::vector<torch::Tensor>& skips);

  /// Full waveform-to-waveform pass; output length equals input length.
  GeneratorTrace trace(const torch::Tensor& noisy, const std::optional<torch::Tensor>& disc_latents);
  torch::Tensor forward(const torch::Tensor& noisy, const std::optional<torch::Tensor>& disc_latents) {
    return trace(noisy, disc_latents).enhanced;
  }

  /// Computes d_l with `disc` when this generator is conditioned, then runs trace().
  torch::Tensor enhance(const torch::Tensor& noisy, const FrozenDiscModel* disc);

  const GeneratorConfig& config() const { return cfg_; }
  bool conditioned() const { return cfg_.conditioning == Conditioning::kDiscriminative; }

  Encoder encoder{nullptr};
  Conditioner conditioner{nullptr};  // null for unconditioned generators
  Decoder decoder{nullptr};

 private:
  GeneratorConfig cfg_;
};
TORCH_MODULE(Generator);

int64_t parameter_count(const torch::nn::Module& module);

/// Generator checkpoint: config, parameters and the fingerprint of the frozen
/// model it was trained against (empty for unconditioned generators).
Checkpoint generator_checkpoint(const Generator& gen, const std::string& disc_fingerprint,
                               nlohmann::json extra_meta = nlohmann::json::object());
void save_generator(const std::filesystem::path& path, const Generator& gen, const std::string& disc_fingerprint,
                    nlohmann::json extra_meta = nlohmann::json::object());
Generator generator_from_checkpoint(const Checkpoint& ckpt);
Generator load_generator(const std::filesystem::path& path, std::string* disc_fingerprint = nullptr);

}  // namespace discogan
