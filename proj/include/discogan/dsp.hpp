// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Spectral analysis/synthesis used throughout the pipeline.
//
// Layout conventions: waveforms are [..., N]; complex spectrograms are
// [..., T, F] with F = window/2 + 1; TF images are [..., C, T, F_used].
// Every 2D array and kernel in this project is written (time, frequency).

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

#include "discogan/audio.hpp"

namespace discogan {

inline constexpr double kSpectralLogEps = 1e-5;
inline constexpr int64_t kUsedBins = 256;

struct StftConfig {
  int64_t window_size = 512;
  int64_t hop = 160;

  int64_t bins() const { return window_size / 2 + 1; }
};

/// Frame count of a center-padded analysis; content independent.
inline int64_t num_frames(int64_t length, int64_t hop) { return 1 + length / hop; }

torch::Tensor periodic_hann(int64_t size, torch::Dtype dtype = torch::kFloat32);

/// Center-padded STFT with a periodic Hann window. Reflect padding is used
/// when the signal is long enough, zero padding otherwise.
/// [..., N] real -> [..., T, F] complex.
torch::Tensor stft(const torch::Tensor& wav, const StftConfig& cfg);

/// Weighted overlap-add inverse of stft(); output padded/truncated to `length`.
torch::Tensor istft(const torch::Tensor& spec, const StftConfig& cfg, int64_t length);

/// [..., T, 257] complex -> [..., 2, T, 256]: (log(1 + |X|), angle(X) / pi).
/// The Nyquist bin is dropped.
torch::Tensor compress_tf(const torch::Tensor& spec);

/// [..., 3, T, 256] (m, phase-cos, phase-sin) -> [..., T, 257] complex with
/// magnitude max(exp(m) - 1, 0), phase atan2(sin, cos) and a zero Nyquist bin.
torch::Tensor decompress_tf(const torch::Tensor& image);

/// log(|STFT|^2 + eps) with hop = window / 4. [..., N] -> [..., T, F].
torch::Tensor log_power_spectrogram(const torch::Tensor& wav, int64_t window_size);

/// Triangular HTK-Mel filterbank spanning 0 Hz to Nyquist, [n_mels, n_fft/2+1].
/// Each triangle is widened to at least one bin spacing per side so that no
/// row is empty for narrow low-frequency bands.
std::vector<std::vector<double>> mel_filterbank(int64_t n_mels, int64_t n_fft,
                                                int sample_rate = kSampleRate);

/// log(Mel(|STFT|) + eps) with hop = window / 4. [..., N] -> [..., T, n_mels].
torch::Tensor mel_spectrogram(const torch::Tensor& wav, int64_t window_size, int64_t n_mels,
                              int sample_rate = kSampleRate);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

torch::Tensor to_tensor(const AudioClip& clip, torch::Dtype dtype = torch::kFloat32);
AudioClip to_clip(const torch::Tensor& wav, int sample_rate = kSampleRate);

}  // namespace discogan
