// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Noisy/clean pair synthesis at exact target SNRs and the line-delimited
// manifest that describes a dataset.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "discogan/audio.hpp"

namespace discogan {

enum class Split { kTrain, kEval };

std::string to_string(Split split);
Split parse_split(const std::string& name);

struct SnrBucket {
  const char* label;
  int low_db;
  int high_db;
};

/// Evaluation SNR groups, lowest first.
inline constexpr std::array<SnrBucket, 4> kEvalBuckets{{
    {"[-20,-16]", -20, -16},
    {"[-15,-11]", -15, -11},
    {"[-10,-6]", -10, -6},
    {"[-5,0]", -5, 0},
}};

struct MixtureSpec {
  std::string id;
  std::string clean_id;
  std::string noise_id;
  std::optional<std::string> rir_id;
  double target_snr = 0.0;  // dB
  double duration = 3.0;    // seconds
  uint64_t seed = 0;
  /// Train against the dry speech instead of the reverberant one.
  bool anechoic_target = false;

  bool operator==(const MixtureSpec&) const = default;
};

struct DatasetManifest {
  Split split = Split::kTrain;
  std::vector<MixtureSpec> entries;

  bool operator==(const DatasetManifest&) const = default;
};

struct Recipe {
  std::size_t count = 0;
  double duration = 3.0;
  double snr_min = -25.0;
  double snr_max = 0.0;
  double reverb_fraction = 0.5;
  uint64_t seed = 0;
  Split split = Split::kTrain;
  bool anechoic_target = false;
};

struct Mixture {
  AudioClip noisy;  // x = s + gain * noise
  AudioClip clean;  // s, the training/evaluation target
  double gain = 1.0;
};

/// Gain g such that clean + g * noise has the requested SNR; powers are taken
/// over the overlapping span of both clips.
double scale_noise_for_snr(const AudioClip& clean, const AudioClip& noise, double target_snr);

/// Renders one mixture. Clean speech is cropped to the duration, convolved with
/// the RIR when present, and noise is cropped or circularly tiled with a seeded
/// offset. Deterministic in (spec, inputs).
Mixture make_mixture(const MixtureSpec& spec, const AudioClip& clean, const AudioClip& noise,
                     const AudioClip* rir = nullptr);

/// Full linear convolution truncated to `length` samples.
std::vector<double> convolve_truncated(std::span<const double> signal, std::span<const double> kernel,
                                       std::size_t length);

/// Label of the evaluation bucket holding `snr`. Edges are half-open at -15,
/// -10 and -5 dB (boundary values join the higher bucket); valid on [-20, 0].
std::string bucket_of_snr(double snr);

/// Sorted WAV ids (paths relative to `dir`) below `dir`.
std::vector<std::string> list_wavs(const std::filesystem::path& dir);

DatasetManifest build_manifest(const std::filesystem::path& clean_dir,
                               const std::filesystem::path& noise_dir,
                               const std::optional<std::filesystem::path>& rir_dir,
                               const Recipe& recipe);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

std::filesystem::path noisy_path(const std::filesystem::path& audio_dir, const std::string& id);
std::filesystem::path clean_path(const std::filesystem::path& audio_dir, const std::string& id);

struct SourceDirs {
  std::filesystem::path clean;
  std::filesystem::path noise;
  std::optional<std::filesystem::path> rir;
};

/// Renders every manifest entry to <out_dir>/<id>_noisy.wav and _clean.wav.
void render_dataset(const DatasetManifest& manifest, const SourceDirs& sources,
                    const std::filesystem::path& out_dir);

}  // namespace discogan
