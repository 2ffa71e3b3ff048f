// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "discogan/audio.hpp"
#include "discogan/datagen.hpp"

namespace discogan {

inline constexpr double kRatioCapDb = 100.0;
inline constexpr double kSegSnrFloorDb = -10.0;
inline constexpr double kSegSnrCeilDb = 35.0;
inline constexpr double kActiveFrameDbfs = -60.0;

/// 10 log10(|s|^2 / |s - est|^2), capped to +-100 dB.
double snr(std::span<const double> reference, std::span<const double> estimate);

/// snr(s, est) - snr(s, noisy).
double delta_snr(std::span<const double> reference, std::span<const double> noisy,
                 std::span<const double> estimate);

/// Scale-invariant SDR: the estimate is projected onto the reference first.
/// Capped to +-100 dB (an exact match, up to scale, gives +100).
double si_sdr(std::span<const double> reference, std::span<const double> estimate);

/// Segmental SNR over non-overlapping frames of `frame` samples. Per-frame
/// values are clamped to [-10, 35] dB and averaged over frames whose
/// reference level is above -60 dBFS.
double seg_snr(std::span<const double> reference, std::span<const double> estimate,
               std::size_t frame = 400);

struct FwSegSnrConfig {
  std::size_t frame = 400;  // 25 ms at 16 kHz
  std::size_t hop = 240;    // 40 % overlap
  std::size_t fft_size = 512;
  int64_t bands = 25;
  double weight_exponent = 0.2;
  int sample_rate = kSampleRate;
};

/// Weighted band SNR for one frame given band magnitudes of reference and
/// estimate; weights are reference magnitude ^ exponent.
double fw_seg_snr_frame(std::span<const double> reference_bands,
                        std::span<const double> estimate_bands, double weight_exponent = 0.2);

/// Frequency-weighted segmental SNR over Mel-spaced bands.
double fw_seg_snr(std::span<const double> reference, std::span<const double> estimate,
                  const FwSegSnrConfig& cfg = {});

struct MetricRow {
  std::string clip_id;
  double input_snr = 0.0;  // target SNR of the mixture
  std::string bucket;
  double snr_in = 0.0;
  double snr_out = 0.0;
  double delta_snr = 0.0;
  double si_sdr = 0.0;
  double delta_si_sdr = 0.0;
  double seg_snr = 0.0;
  double fw_seg_snr = 0.0;
  double delta_fw_seg_snr = 0.0;
  std::optional<std::string> error;
};

struct BucketSummary {
  std::string bucket;
  std::size_t count = 0;
  double delta_snr = 0.0;
  double si_sdr = 0.0;
  double delta_si_sdr = 0.0;
  double seg_snr = 0.0;
  double fw_seg_snr = 0.0;
  double delta_fw_seg_snr = 0.0;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  std::vector<BucketSummary> buckets;  // in kEvalBuckets order

  std::size_t failures() const;
  const BucketSummary& bucket(const std::string& label) const;
};

/// Computes every metric for one (clean, noisy, enhanced) triple.
MetricRow score_clip(const std::string& clip_id, double target_snr, std::span<const double> clean,
                     std::span<const double> noisy, std::span<const double> enhanced);

/// Arithmetic means of the rows without an error, grouped by bucket.
std::vector<BucketSummary> summarize(const std::vector<MetricRow>& rows);

/// Maps (clip id, noisy clip) to an enhanced clip of the same length.
using EnhanceFn = std::function<AudioClip(const std::string& clip_id, const AudioClip& noisy)>;

/// Runs `enhance` on every eval entry of the manifest (audio resolved relative
/// to `audio_dir`), scores each clip and aggregates per SNR bucket. A failing
/// clip becomes a row-level error excluded from the means. When `out_path` is
/// given the report is written there.
MetricReport evaluate_dataset(const DatasetManifest& manifest, const std::filesystem::path& audio_dir,
                              const EnhanceFn& enhance,
                              const std::optional<std::filesystem::path>& out_path = std::nullopt);

/// TSV table: one row per clip, then a "# buckets" block.
void write_report(const std::filesystem::path& path, const MetricReport& report);
std::string format_bucket_table(const MetricReport& report);

}  // namespace discogan
