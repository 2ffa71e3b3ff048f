// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace discogan {

inline constexpr int kSampleRate = 16000;

/// Mono time-domain signal. Samples are nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::span<const double> view() const { return samples; }
};

enum class WavFormat { kPcm16, kFloat32 };

/// Reads a mono RIFF/WAVE file holding 16-bit PCM or 32-bit float samples.
AudioClip read_wav(const std::filesystem::path& path);

/// Writes a mono WAV file. Non-finite samples are rejected; for kPcm16 any
/// sample outside [-1, 1] is an error rather than a silent saturation.
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavFormat format = WavFormat::kFloat32);

double mean_power(std::span<const double> x);

}  // namespace discogan
