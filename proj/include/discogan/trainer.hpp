// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Two-stage training.
//
// Stage 1 fits the discriminative model on negative SI-SDR. Stage 2 freezes it
// and trains the generator against the multi-scale STFT critic; the critic is
// stepped only when its own hinge loss exceeds the generator's adversarial term.

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "discogan/adversary.hpp"
#include "discogan/checkpoint.hpp"
#include "discogan/datagen.hpp"
#include "discogan/disc_model.hpp"
#include "discogan/generator.hpp"
#include "discogan/losses.hpp"

namespace discogan {

enum class GateMode { kLoss, kAlways, kNever };

std::string to_string(GateMode g);
GateMode parse_gate_mode(const std::string& name);

struct ModelPreset {
  DiscModelConfig disc;
  GeneratorConfig gen;
  MsStftConfig adv;

  static ModelPreset paper();
  static ModelPreset toy();
};

struct TrainConfig {
  int stage = 1;
  int64_t batch_size = 16;
  int64_t iterations = 600000;
  double lr = 3e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  uint64_t seed = 0;
  int64_t checkpoint_every = 1000;
  Conditioning conditioning = Conditioning::kDiscriminative;
  GateMode gate = GateMode::kLoss;
  int64_t segment = 0;  // training crop in samples; 0 uses the shortest clip
  bool toy = false;
  LossWeights weights;

  ModelPreset preset() const { return toy ? ModelPreset::toy() : ModelPreset::paper(); }
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);

/// Reads an INI file with a [train] section; missing keys keep their defaults.
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});

struct TrainingSet {
  std::vector<torch::Tensor> noisy;  // float32 [N_i]
  std::vector<torch::Tensor> clean;
  std::vector<std::string> ids;

  std::size_t size() const { return noisy.size(); }
  int64_t shortest() const;
};

TrainingSet load_training_set(const DatasetManifest& manifest, const std::filesystem::path& audio_dir);

struct Batch {
  torch::Tensor noisy;  // [B, L]
  torch::Tensor clean;
};

/// Batches are a pure function of (seed, step): each epoch is a seeded uniform
/// shuffle of the clip indices and step k takes flat positions [kB, (k+1)B).
/// Clips longer than the segment are cropped at a seeded offset.
class BatchSampler {
 public:
  BatchSampler(std::size_t clips, int64_t batch_size, uint64_t seed);
  std::vector<std::size_t> indices(int64_t step) const;
  Batch batch(int64_t step, const TrainingSet& data, int64_t segment) const;

 private:
  const std::vector<std::size_t>& permutation(int64_t epoch) const;

  std::size_t clips_;
  int64_t batch_size_;
  uint64_t seed_;
  mutable std::map<int64_t, std::vector<std::size_t>> perms_;
};

/// True iff the critic's hinge loss strictly exceeds the generator's
/// adversarial term on the current batch.
bool should_update_disc(double l_disc_train, double l_adv_gen);

std::unique_ptr<torch::optim::Adam> make_adam(const std::vector<torch::Tensor>& params, const TrainConfig& cfg);
void export_adam(const torch::optim::Adam& opt, const std::string& prefix, Checkpoint& ckpt);
void import_adam(torch::optim::Adam& opt, const std::string& prefix, const Checkpoint& ckpt);

struct RunPaths {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  std::optional<std::filesystem::path> resume;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, std::string last_good)
      : std::runtime_error(what), last_good_checkpoint(std::move(last_good)) {}
  std::string last_good_checkpoint;
};

struct Stage1Result {
  DiscModel model{nullptr};
  std::vector<double> losses;  // losses[i] is the pre-step loss of step i + 1
};

Stage1Result train_stage1(const TrainingSet& data, const TrainConfig& cfg, const RunPaths& paths);

struct Stage2State {
  Generator gen{nullptr};
  MsStftDiscriminator adv{nullptr};
  std::optional<FrozenDiscModel> frozen;  // required when gen is conditioned
  std::unique_ptr<torch::optim::Adam> gen_opt;
  std::unique_ptr<torch::optim::Adam> adv_opt;
  int64_t step = 0;
};

Stage2State make_stage2_state(const TrainConfig& cfg, std::optional<FrozenDiscModel> frozen);

struct StepRecord {
  int64_t step = 0;
  LossBreakdown losses;
  double l_disc = 0.0;
  bool disc_updated = false;
};

nlohmann::json to_json(const StepRecord& r);

/// One generator update and a gated critic update; returns pre-step losses.
StepRecord train_stage2_step(const Batch& batch, Stage2State& state, const TrainConfig& cfg);

Checkpoint stage2_checkpoint(const Stage2State& state, const TrainConfig& cfg);
void restore_stage2(Stage2State& state, const Checkpoint& ckpt);

struct Stage2Result {
  Stage2State state;
  std::vector<StepRecord> records;
};

Stage2Result train_stage2(const TrainingSet& data, const TrainConfig& cfg, std::optional<FrozenDiscModel> frozen,
                          const RunPaths& paths);

}  // namespace discogan
