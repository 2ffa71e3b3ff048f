// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Serial enhancer chains and the five-configuration ablation.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "discogan/audio.hpp"
#include "discogan/datagen.hpp"
#include "discogan/disc_model.hpp"
#include "discogan/generator.hpp"
#include "discogan/metrics.hpp"

namespace discogan {

enum class StageKind { kIdentity, kDisc, kGan, kGanNoCond };

std::string to_string(StageKind s);
StageKind parse_stage(const std::string& name);

struct ChainSpec {
  std::vector<StageKind> stages;

  /// Comma- or plus-separated stage names, e.g. "disc,gan".
  static ChainSpec parse(const std::string& text);
  std::string name() const;
  bool uses(StageKind s) const;
};

struct ChainCheckpoints {
  std::optional<std::filesystem::path> disc;
  std::optional<std::filesystem::path> gan;
  std::optional<std::filesystem::path> gan_nocond;
};

/// Loads the checkpoints a chain needs and applies its stages in order, each
/// stage consuming the previous stage's waveform.
class Enhancer {
 public:
  Enhancer(ChainSpec spec, const ChainCheckpoints& ckpts);

  AudioClip enhance(const AudioClip& noisy) const;
  torch::Tensor enhance(const torch::Tensor& noisy) const;
  const ChainSpec& spec() const { return spec_; }

 private:
  ChainSpec spec_;
  std::optional<FrozenDiscModel> disc_;
  Generator gan_{nullptr};
  Generator gan_nocond_{nullptr};
};

struct AblationEntry {
  std::string name;
  ChainSpec chain;
};

/// nocogan, disc+nocogan, gan, disc+gan, gan+disc.
const std::vector<AblationEntry>& ablation_entries();

struct AblationResult {
  std::vector<std::pair<std::string, MetricReport>> reports;  // in ablation_entries() order
  std::vector<std::string> missing;                           // "name: reason"
};

/// Evaluates every ablation configuration it can build. Writes <name>.tsv per
/// configuration and the combined ablation.tsv into `out_dir`.
AblationResult run_ablation(const DatasetManifest& manifest, const std::filesystem::path& audio_dir,
                            const ChainCheckpoints& ckpts, const std::filesystem::path& out_dir);

/// Combined table: one row per configuration, Delta SNR, Delta SI-SDR and
/// Delta FWSegSNR for each SNR bucket.
std::string format_ablation_table(const AblationResult& result);

}  // namespace discogan
