// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "discogan/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace discogan {
namespace F = torch::nn::functional;

namespace {

void check_stft_config(const StftConfig& cfg) {
  if (cfg.window_size < 2 || cfg.window_size % 2 != 0)
    throw std::invalid_argument("stft: window size must be even and >= 2");
  if (cfg.hop < 1) throw std::invalid_argument("stft: hop must be positive");
  if (cfg.hop > cfg.window_size) throw std::invalid_argument("stft: hop exceeds window size");
}

std::vector<int64_t> leading_dims(const torch::Tensor& t, int64_t trailing) {
  auto sizes = t.sizes().vec();
  sizes.resize(sizes.size() - static_cast<std::size_t>(trailing));
  return sizes;
}

}  // namespace

torch::Tensor periodic_hann(int64_t size, torch::Dtype dtype) {
  return torch::hann_window(size, /*periodic=*/true, torch::TensorOptions().dtype(dtype));
}

torch::Tensor stft(const torch::Tensor& wav, const StftConfig& cfg) {
  check_stft_config(cfg);
  if (wav.dim() < 1 || wav.size(-1) == 0) throw std::invalid_argument("stft: empty clip");
  const int64_t n = wav.size(-1);
  auto lead = leading_dims(wav, 1);
  auto x = wav.reshape({-1, 1, n});
  const int64_t pad = cfg.window_size / 2;
  if (n > pad) {
    x = F::pad(x, F::PadFuncOptions({pad, pad}).mode(torch::kReflect));
  } else {
    x = F::pad(x, F::PadFuncOptions({pad, pad}));
  }
  auto window = periodic_hann(cfg.window_size, x.scalar_type());
  auto spec = torch::stft(x.squeeze(1), cfg.window_size, cfg.hop, cfg.window_size, window,
                          /*center=*/false, "reflect", /*normalized=*/false, /*onesided=*/true,
                          /*return_complex=*/true);
  // [B, F, T] -> [..., T, F]
  spec = spec.transpose(-1, -2);
  lead.push_back(spec.size(-2));
  lead.push_back(spec.size(-1));
  return spec.reshape(lead);
}

torch::Tensor istft(const torch::Tensor& spec, const StftConfig& cfg, int64_t length) {
  check_stft_config(cfg);
  if (!spec.is_complex() || spec.dim() < 2) throw std::invalid_argument("istft: expected complex [..., T, F]");
  if (spec.size(-1) != cfg.bins()) throw std::invalid_argument("istft: bin count does not match window");
  auto lead = leading_dims(spec, 2);
  auto x = spec.reshape({-1, spec.size(-2), spec.size(-1)}).transpose(-1, -2);
  auto real_dtype = torch::real(spec).scalar_type();
  auto window = periodic_hann(cfg.window_size, real_dtype);
  torch::Tensor wav;
  try {
    wav = torch::istft(x, cfg.window_size, cfg.hop, cfg.window_size, window, /*center=*/true,
                       /*normalized=*/false, /*onesided=*/true, length, /*return_complex=*/false);
  } catch (const c10::Error& e) {
    throw std::invalid_argument(std::string("istft: degenerate window normalization: ") +
                                e.what_without_backtrace());
  }
  lead.push_back(length);
  return wav.reshape(lead);
}

torch::Tensor compress_tf(const torch::Tensor& spec) {
  if (!spec.is_complex() || spec.size(-1) != kUsedBins + 1)
    throw std::invalid_argument("compress_tf: expected complex [..., T, 257]");
  auto used = spec.narrow(-1, 0, kUsedBins);
  auto mag = torch::log1p(torch::abs(used));
  auto phase = torch::angle(used) / std::numbers::pi;
  return torch::stack({mag, phase}, -3);
}

torch::Tensor decompress_tf(const torch::Tensor& image) {
  if (image.dim() < 3 || image.size(-3) != 3 || image.size(-1) != kUsedBins)
    throw std::invalid_argument("decompress_tf: expected [..., 3, T, 256]");
  if (!torch::isfinite(image).all().item<bool>())
    throw std::invalid_argument("decompress_tf: non-finite input");
  auto m = image.select(-3, 0);
  auto pc = image.select(-3, 1);
  auto ps = image.select(-3, 2);
  auto mag = torch::relu(torch::expm1(m));
  // cos/sin of atan2(ps, pc) without the singular gradient at the origin;
  // atan2(0, 0) = 0 maps to (1, 0).
  auto norm = torch::sqrt(pc * pc + ps * ps);
  auto nonzero = norm > 0;
  auto safe = torch::where(nonzero, norm, torch::ones_like(norm));
  auto cos = torch::where(nonzero, pc / safe, torch::ones_like(pc));
  auto sin = torch::where(nonzero, ps / safe, torch::zeros_like(ps));
  auto spec = torch::complex(mag * cos, mag * sin);
  auto pad_shape = spec.sizes().vec();
  pad_shape.back() = 1;
  return torch::cat({spec, torch::zeros(pad_shape, spec.options())}, -1);
}

torch::Tensor log_power_spectrogram(const torch::Tensor& wav, int64_t window_size) {
  if (window_size < 4) throw std::invalid_argument("log_power_spectrogram: window shorter than 4 samples");
  auto spec = stft(wav, {window_size, window_size / 4});
  auto re = torch::real(spec);
  auto im = torch::imag(spec);
  return torch::log(re * re + im * im + kSpectralLogEps);
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::vector<double>> mel_filterbank(int64_t n_mels, int64_t n_fft, int sample_rate) {
  if (n_mels < 1 || n_mels > n_fft / 2)
    throw std::invalid_argument("mel_filterbank: n_mels too large for window " + std::to_string(n_fft));
  const int64_t bins = n_fft / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double spacing = static_cast<double>(sample_rate) / static_cast<double>(n_fft);
  const double top = hz_to_mel(nyquist);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(n_mels + 1));

  std::vector<std::vector<double>> fb(static_cast<std::size_t>(n_mels),
                                      std::vector<double>(static_cast<std::size_t>(bins), 0.0));
  for (int64_t j = 0; j < n_mels; ++j) {
    const double center = edges[j + 1];
    const double left = std::max(center - edges[j], spacing);
    const double right = std::max(edges[j + 2] - center, spacing);
    for (int64_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * spacing;
      const double w = std::min((f - (center - left)) / left, ((center + right) - f) / right);
      fb[j][k] = std::max(0.0, w);
    }
  }
  return fb;
}

torch::Tensor mel_spectrogram(const torch::Tensor& wav, int64_t window_size, int64_t n_mels,
                              int sample_rate) {
  if (window_size < 4) throw std::invalid_argument("mel_spectrogram: window shorter than 4 samples");
  auto rows = mel_filterbank(n_mels, window_size, sample_rate);
  auto fb = torch::empty({n_mels, window_size / 2 + 1}, torch::kFloat64);
  auto acc = fb.accessor<double, 2>();
  for (int64_t j = 0; j < n_mels; ++j)
    for (int64_t k = 0; k < fb.size(1); ++k) acc[j][k] = rows[j][k];
  auto mag = torch::abs(stft(wav, {window_size, window_size / 4}));
  return torch::log(torch::matmul(mag, fb.to(mag.scalar_type()).t()) + kSpectralLogEps);
}

torch::Tensor to_tensor(const AudioClip& clip, torch::Dtype dtype) {
  auto t = torch::from_blob(const_cast<double*>(clip.samples.data()),
                            {static_cast<int64_t>(clip.samples.size())}, torch::kFloat64);
  return t.to(dtype, /*non_blocking=*/false, /*copy=*/true);
}

AudioClip to_clip(const torch::Tensor& wav, int sample_rate) {
  auto flat = wav.detach().to(torch::kFloat64).contiguous().reshape({-1});
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.assign(flat.data_ptr<double>(), flat.data_ptr<double>() + flat.numel());
  return clip;
}

}  // namespace discogan
