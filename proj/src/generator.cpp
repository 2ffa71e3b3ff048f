// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "discogan/generator.hpp"

#include <algorithm>
#include <stdexcept>

namespace discogan {

std::string to_string(Conditioning c) { return c == Conditioning::kDiscriminative ? "discogan" : "nocogan"; }

Conditioning parse_conditioning(const std::string& name) {
  if (name == "discogan") return Conditioning::kDiscriminative;
  if (name == "nocogan") return Conditioning::kNone;
  throw std::invalid_argument("unknown conditioning '" + name + "' (expected discogan or nocogan)");
}

int64_t GeneratorConfig::block_in_channels(int64_t b) const {
  return b == 0 ? base_channels : block_out_channels(b - 1);
}

int64_t GeneratorConfig::block_out_channels(int64_t b) const {
  return std::min(block_in_channels(b) * 2, max_channels);
}

std::vector<int64_t> GeneratorConfig::channel_schedule() const {
  std::vector<int64_t> out;
  for (int64_t b = 0; b < blocks; ++b) out.push_back(block_out_channels(b));
  return out;
}

void GeneratorConfig::validate() const {
  if (base_channels < 1 || blocks < 1 || latent_channels < 1 || lstm_units < 1)
    throw std::invalid_argument("generator config: sizes must be positive");
  if (blocks > 8 || kUsedBins % (int64_t{1} << blocks) != 0)
    throw std::invalid_argument("generator config: 256 bins not divisible by 2^blocks");
  if (attention.model_dim != latent_channels)
    throw std::invalid_argument("generator config: attention model_dim must equal latent_channels");
  if (film_reduction < 1) throw std::invalid_argument("generator config: film_reduction must be positive");
}

GeneratorConfig GeneratorConfig::toy() {
  GeneratorConfig c;
  c.base_channels = 8;
  c.blocks = 4;
  c.latent_channels = 32;
  c.lstm_units = 64;
  c.disc_latent_dim = DiscModelConfig::toy().latent_dim();
  c.attention.model_dim = 32;
  return c;
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = {{"base_channels", c.base_channels},
       {"blocks", c.blocks},
       {"latent_channels", c.latent_channels},
       {"max_channels", c.max_channels},
       {"lstm_units", c.lstm_units},
       {"lstm_layers", c.lstm_layers},
       {"film_reduction", c.film_reduction},
       {"use_film", c.use_film},
       {"conditioning", to_string(c.conditioning)},
       {"disc_latent_dim", c.disc_latent_dim},
       {"attention", c.attention},
       {"stft", {{"window_size", c.stft.window_size}, {"hop", c.stft.hop}}}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  c.base_channels = j.at("base_channels").get<int64_t>();
  c.blocks = j.at("blocks").get<int64_t>();
  c.latent_channels = j.at("latent_channels").get<int64_t>();
  c.max_channels = j.at("max_channels").get<int64_t>();
  c.lstm_units = j.at("lstm_units").get<int64_t>();
  c.lstm_layers = j.at("lstm_layers").get<int64_t>();
  c.film_reduction = j.at("film_reduction").get<int64_t>();
  c.use_film = j.at("use_film").get<bool>();
  c.conditioning = parse_conditioning(j.at("conditioning").get<std::string>());
  c.disc_latent_dim = j.at("disc_latent_dim").get<int64_t>();
  c.attention = j.at("attention").get<AttentionConfig>();
  c.stft.window_size = j.at("stft").at("window_size").get<int64_t>();
  c.stft.hop = j.at("stft").at("hop").get<int64_t>();
}

ResidualUnitImpl::ResidualUnitImpl(int64_t channels) {
  norm1_ = register_module("norm1", ChannelNorm(channels));
  conv1_ = register_module("conv1", CausalConv2d(ConvSpec{channels, channels, 3, 3}));
  norm2_ = register_module("norm2", ChannelNorm(channels));
  conv2_ = register_module("conv2", CausalConv2d(ConvSpec{channels, channels, 3, 3}));
}

torch::Tensor ResidualUnitImpl::forward(const torch::Tensor& x) {
  auto y = conv1_(torch::elu(norm1_(x)));
  y = conv2_(torch::elu(norm2_(y)));
  return x + y;
}

torch::Tensor film_combine(const torch::Tensor& decoded, const torch::Tensor& gamma, const torch::Tensor& beta,
                           const torch::Tensor& attention) {
  return decoded + ((gamma * attention) * decoded + beta * attention);
}

FilmImpl::FilmImpl(int64_t channels, int64_t reduction) {
  const int64_t reduced = std::max<int64_t>(1, channels / reduction);
  gamma_conv = register_module("gamma_conv", CausalConv2d(ConvSpec{channels, channels, 1, 3}));
  beta_conv = register_module("beta_conv", CausalConv2d(ConvSpec{channels, channels, 1, 3}));
  attn_reduce = register_module("attn_reduce", CausalConv2d(ConvSpec{channels, reduced, 1, 3}));
  attn_restore = register_module("attn_restore", CausalConv2d(ConvSpec{reduced, channels, 1, 3}));
}

FilmFactors FilmImpl::factors(const torch::Tensor& skip) {
  return {torch::relu(gamma_conv(skip)), torch::sigmoid(beta_conv(skip)),
          torch::sigmoid(attn_restore(torch::relu(attn_reduce(skip))))};
}

torch::Tensor FilmImpl::forward(const torch::Tensor& decoded, const torch::Tensor& skip) {
  if (decoded.size(2) != skip.size(2) || decoded.size(3) != skip.size(3))
    throw std::invalid_argument("film: decoder and skip resolutions differ");
  auto f = factors(skip);
  return film_combine(decoded, f.gamma, f.beta, f.attention);
}

EncoderImpl::EncoderImpl(const GeneratorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  input_conv_ = register_module("input_conv", CausalConv2d(ConvSpec{2, cfg_.base_channels, 3, 3}));
  residuals_ = register_module("residuals", torch::nn::ModuleList());
  down_norms_ = register_module("down_norms", torch::nn::ModuleList());
  down_convs_ = register_module("down_convs", torch::nn::ModuleList());
  for (int64_t b = 0; b < cfg_.blocks; ++b) {
    const int64_t in = cfg_.block_in_channels(b);
    residuals_->push_back(ResidualUnit(in));
    down_norms_->push_back(ChannelNorm(in));
    down_convs_->push_back(CausalConv2d(ConvSpec{in, cfg_.block_out_channels(b), 2, 4, 2, 1}));
  }
  bottleneck_norm_ = register_module("bottleneck_norm", ChannelNorm(cfg_.block_out_channels(cfg_.blocks - 1)));
  lstm_ = register_module("lstm", torch::nn::LSTM(torch::nn::LSTMOptions(cfg_.bottleneck_width(), cfg_.lstm_units)
                                                      .num_layers(cfg_.lstm_layers)
                                                      .batch_first(true)));
  latent_proj_ = register_module("latent_proj", torch::nn::Linear(cfg_.lstm_units, cfg_.latent_channels));
}

EncoderState EncoderImpl::forward(const torch::Tensor& image) {
  if (image.dim() != 4 || image.size(1) != 2 || image.size(3) != kUsedBins)
    throw std::invalid_argument("encoder: expected [B, 2, T, 256] input");
  EncoderState state;
  auto x = input_conv_(image);
  for (int64_t b = 0; b < cfg_.blocks; ++b) {
    x = residuals_[b]->as<ResidualUnitImpl>()->forward(x);
    state.skips.push_back(x);
    x = torch::elu(down_norms_[b]->as<ChannelNormImpl>()->forward(x));
    x = down_convs_[b]->as<CausalConv2dImpl>()->forward(x);
  }
  x = torch::elu(bottleneck_norm_(x));
  const int64_t n = x.size(0), c = x.size(1), t = x.size(2), f = x.size(3);
  auto seq = x.permute({0, 2, 1, 3}).reshape({n, t, c * f});
  state.latents = latent_proj_(std::get<0>(lstm_(seq)));
  return state;
}

DecoderImpl::DecoderImpl(const GeneratorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  entry_ = register_module("entry", torch::nn::Linear(2 * cfg_.latent_channels, cfg_.bottleneck_width()));
  up_norms_ = register_module("up_norms", torch::nn::ModuleList());
  up_convs_ = register_module("up_convs", torch::nn::ModuleList());
  residuals_ = register_module("residuals", torch::nn::ModuleList());
  if (cfg_.use_film) films_ = register_module("films", torch::nn::ModuleList());
  for (int64_t b = cfg_.blocks - 1; b >= 0; --b) {
    const int64_t in = cfg_.block_out_channels(b), out = cfg_.block_in_channels(b);
    up_norms_->push_back(ChannelNorm(in));
    up_convs_->push_back(CausalConvTranspose2d(ConvSpec{in, out, 2, 4, 2, 1}));
    if (cfg_.use_film) films_->push_back(Film(out, cfg_.film_reduction));
    residuals_->push_back(ResidualUnit(out));
  }
  output_norm_ = register_module("output_norm", ChannelNorm(cfg_.base_channels));
  output_conv_ = register_module("output_conv", CausalConv2d(ConvSpec{cfg_.base_channels, 3, 3, 3}));
}

Film DecoderImpl::film(int64_t block) const {
  if (!cfg_.use_film) return Film{nullptr};
  return Film(films_->ptr<FilmImpl>(static_cast<std::size_t>(cfg_.blocks - 1 - block)));
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& latents, const std::vector<torch::Tensor>& skips) {
  if (static_cast<int64_t>(skips.size()) != cfg_.blocks) throw std::invalid_argument("decoder: wrong number of skips");
  if (latents.dim() != 3 || latents.size(2) != 2 * cfg_.latent_channels)
    throw std::invalid_argument("decoder: expected [B, T, 2 C_l] latents");
  const int64_t n = latents.size(0), t = latents.size(1);
  const int64_t c = cfg_.block_out_channels(cfg_.blocks - 1), f = cfg_.bottleneck_bins();
  auto x = entry_(latents).reshape({n, t, c, f}).permute({0, 2, 1, 3});
  for (int64_t i = 0; i < cfg_.blocks; ++i) {
    const int64_t b = cfg_.blocks - 1 - i;
    const auto& skip = skips[b];
    x = torch::elu(up_norms_[i]->as<ChannelNormImpl>()->forward(x));
    x = up_convs_[i]->as<CausalConvTranspose2dImpl>()->forward(x);
    if (x.sizes() != skip.sizes()) throw std::invalid_argument("decoder: skip shape mismatch");
    if (cfg_.use_film) x = films_[i]->as<FilmImpl>()->forward(x, skip);
    x = residuals_[i]->as<ResidualUnitImpl>()->forward(x);
  }
  return output_conv_(torch::elu(output_norm_(x)));
}

GeneratorImpl::GeneratorImpl(GeneratorConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  encoder = register_module("encoder", Encoder(cfg_));
  if (conditioned()) conditioner = register_module("conditioner", Conditioner(cfg_.disc_latent_dim, cfg_.attention));
  decoder = register_module("decoder", Decoder(cfg_));
}

EncoderState GeneratorImpl::encode(const torch::Tensor& image) { return encoder(image); }

torch::Tensor GeneratorImpl::fuse(const torch::Tensor& gen_latents, const std::optional<torch::Tensor>& disc_latents) {
  if (!conditioned()) return torch::cat({gen_latents, torch::zeros_like(gen_latents)}, -1);
  if (!disc_latents) throw std::invalid_argument("generator: conditioned generator needs disc latents");
  return conditioner(gen_latents, *disc_latents);
}

torch::Tensor GeneratorImpl::decode(const torch::Tensor& fused, const std::vector<torch::Tensor>& skips) {
  return decoder(fused, skips);
}

GeneratorTrace GeneratorImpl::trace(const torch::Tensor& noisy_in, const std::optional<torch::Tensor>& disc_latents) {
  auto noisy = noisy_in.dim() == 1 ? noisy_in.unsqueeze(0) : noisy_in;
  GeneratorTrace out;
  auto spec = stft(noisy, cfg_.stft);
  auto state = encode(compress_tf(spec));
  out.latents = state.latents;
  out.fused = fuse(state.latents, disc_latents);
  out.image = decode(out.fused, state.skips);
  out.enhanced = istft(decompress_tf(out.image), cfg_.stft, noisy.size(-1));
  if (noisy_in.dim() == 1) out.enhanced = out.enhanced.squeeze(0);
  return out;
}

torch::Tensor GeneratorImpl::enhance(const torch::Tensor& noisy, const FrozenDiscModel* disc) {
  if (!conditioned()) return forward(noisy, std::nullopt);
  if (!disc) throw std::invalid_argument("generator: conditioned generator needs a frozen disc model");
  return forward(noisy, disc->forward(noisy).latents);
}

int64_t parameter_count(const torch::nn::Module& module) {
  int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

Checkpoint generator_checkpoint(const Generator& gen, const std::string& disc_fingerprint, nlohmann::json extra_meta) {
  Checkpoint ckpt;
  ckpt.meta = std::move(extra_meta);
  ckpt.meta["kind"] = "generator";
  ckpt.meta["config"] = gen->config();
  ckpt.meta["disc_fingerprint"] = disc_fingerprint;
  ckpt.meta["fingerprint"] = fingerprint(*gen);
  export_module(*gen, "gen.", ckpt);
  return ckpt;
}

void save_generator(const std::filesystem::path& path, const Generator& gen, const std::string& disc_fingerprint,
                    nlohmann::json extra_meta) {
  save_checkpoint(path, generator_checkpoint(gen, disc_fingerprint, std::move(extra_meta)));
}

Generator generator_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.meta.value("kind", "") != "generator") throw std::runtime_error("checkpoint does not hold a generator");
  Generator gen(ckpt.meta.at("config").get<GeneratorConfig>());
  import_module(*gen, "gen.", ckpt);
  return gen;
}

Generator load_generator(const std::filesystem::path& path, std::string* disc_fingerprint) {
  auto ckpt = load_checkpoint(path);
  auto gen = generator_from_checkpoint(ckpt);
  if (disc_fingerprint) *disc_fingerprint = ckpt.meta.value("disc_fingerprint", "");
  return gen;
}

}  // namespace discogan
