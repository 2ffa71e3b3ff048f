// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// discogan: data mixing, two-stage training, enhancement and evaluation.

#include <torch/torch.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "discogan/audio.hpp"
#include "discogan/chain.hpp"
#include "discogan/datagen.hpp"
#include "discogan/metrics.hpp"
#include "discogan/trainer.hpp"

namespace fs = std::filesystem;
using namespace discogan;

namespace {

struct Globals {
  std::string config;
  std::optional<uint64_t> seed;
  std::string device = "cpu";
  bool toy = false;
};

struct MixArgs {
  std::string clean_dir, noise_dir, rir_dir, out_dir;
  Recipe recipe;
  std::string split = "train";
};

struct TrainArgs {
  int stage = 0;
  std::string manifest, audio_dir, out, log, resume, disc_checkpoint, conditioning, gate;
  std::optional<int64_t> iterations, batch_size, checkpoint_every, segment;
};

struct ChainArgs {
  std::string chain = "gan";
  std::string disc, gan, gan_nocond;

  ChainCheckpoints checkpoints() const {
    ChainCheckpoints c;
    if (!disc.empty()) c.disc = disc;
    if (!gan.empty()) c.gan = gan;
    if (!gan_nocond.empty()) c.gan_nocond = gan_nocond;
    return c;
  }
};

void add_checkpoint_flags(CLI::App* app, ChainArgs& a) {
  app->add_option("--disc", a.disc, "Stage-1 discriminative model checkpoint");
  app->add_option("--gan", a.gan, "Conditioned generator checkpoint");
  app->add_option("--gan-nocond", a.gan_nocond, "Unconditioned generator checkpoint");
}

fs::path audio_dir_for(const std::string& manifest, const std::string& audio_dir) {
  return audio_dir.empty() ? fs::path(manifest).parent_path() : fs::path(audio_dir);
}

int cmd_mix(const Globals& g, MixArgs a) {
  a.recipe.seed = g.seed.value_or(0);
  a.recipe.split = parse_split(a.split);
  std::optional<fs::path> rir;
  if (!a.rir_dir.empty()) rir = a.rir_dir;
  auto manifest = build_manifest(a.clean_dir, a.noise_dir, rir, a.recipe);
  fs::create_directories(a.out_dir);
  render_dataset(manifest, {a.clean_dir, a.noise_dir, rir}, a.out_dir);
  write_manifest(fs::path(a.out_dir) / "manifest.jsonl", manifest);
  std::cout << "wrote " << manifest.entries.size() << " mixtures to " << a.out_dir << "\n";
  return 0;
}

int cmd_train(const Globals& g, const TrainArgs& a) {
  TrainConfig cfg;
  if (!g.config.empty()) cfg = load_train_config(g.config);
  if (a.stage != 0) cfg.stage = a.stage;
  if (g.seed) cfg.seed = *g.seed;
  if (g.toy) cfg.toy = true;
  if (a.iterations) cfg.iterations = *a.iterations;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.checkpoint_every) cfg.checkpoint_every = *a.checkpoint_every;
  if (a.segment) cfg.segment = *a.segment;
  if (!a.conditioning.empty()) cfg.conditioning = parse_conditioning(a.conditioning);
  if (!a.gate.empty()) cfg.gate = parse_gate_mode(a.gate);
  cfg.validate();

  if (cfg.stage == 2 && a.disc_checkpoint.empty()) {
    std::cerr << "error: stage 2 needs --disc-checkpoint (a stage-1 checkpoint)\n";
    return 2;
  }
  auto data = load_training_set(read_manifest(a.manifest), audio_dir_for(a.manifest, a.audio_dir));
  RunPaths paths{a.out, a.log.empty() ? fs::path(a.out + ".log.jsonl") : fs::path(a.log), std::nullopt};
  if (!a.resume.empty()) paths.resume = a.resume;

  try {
    if (cfg.stage == 1) {
      auto r = train_stage1(data, cfg, paths);
      if (!r.losses.empty()) std::printf("stage 1: %zu steps, final loss %.6f\n", r.losses.size(), r.losses.back());
    } else {
      std::optional<FrozenDiscModel> frozen;
      frozen.emplace(load_disc_model(a.disc_checkpoint));
      if (cfg.conditioning == Conditioning::kNone) frozen.reset();
      auto r = train_stage2(data, cfg, std::move(frozen), paths);
      if (!r.records.empty())
        std::printf("stage 2 (%s): %zu steps, final total %.6f\n", to_string(cfg.conditioning).c_str(),
                    r.records.size(), r.records.back().losses.total);
    }
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "; last good checkpoint: "
              << (e.last_good_checkpoint.empty() ? "(none)" : e.last_good_checkpoint) << "\n";
    return 3;
  }
  std::cout << "checkpoint: " << a.out << "\n";
  return 0;
}

int cmd_enhance(const ChainArgs& c, const std::string& input, const std::string& output) {
  Enhancer enhancer(ChainSpec::parse(c.chain), c.checkpoints());
  if (fs::is_directory(input)) {
    fs::create_directories(output);
    const auto ids = list_wavs(input);
    for (const auto& id : ids) {
      const fs::path dst = fs::path(output) / id;
      fs::create_directories(dst.parent_path());
      write_wav(dst, enhancer.enhance(read_wav(fs::path(input) / id)));
    }
    std::cout << "enhanced " << ids.size() << " files into " << output << "\n";
  } else {
    write_wav(output, enhancer.enhance(read_wav(input)));
  }
  return 0;
}

int cmd_eval(const ChainArgs& c, const std::string& manifest_path, const std::string& audio_dir,
             const std::string& report_path) {
  auto manifest = read_manifest(manifest_path);
  Enhancer enhancer(ChainSpec::parse(c.chain), c.checkpoints());
  auto fn = [&](const std::string&, const AudioClip& noisy) { return enhancer.enhance(noisy); };
  auto report = evaluate_dataset(manifest, audio_dir_for(manifest_path, audio_dir), fn, fs::path(report_path));
  std::cout << format_bucket_table(report);
  const std::size_t failed = report.failures();
  if (failed > 0) std::cerr << failed << " of " << report.rows.size() << " clips failed\n";
  return failed * 10 > report.rows.size() ? 1 : 0;
}

int cmd_ablate(const ChainArgs& c, const std::string& manifest_path, const std::string& audio_dir,
               const std::string& out_dir) {
  auto result = run_ablation(read_manifest(manifest_path), audio_dir_for(manifest_path, audio_dir), c.checkpoints(),
                             out_dir);
  std::cout << format_ablation_table(result);
  for (const auto& m : result.missing) std::cerr << "missing configuration " << m << "\n";
  int status = result.missing.empty() ? 0 : 1;
  for (const auto& [name, report] : result.reports)
    if (report.failures() * 10 > report.rows.size()) status = 1;
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-conditioned time-frequency GAN speech enhancement"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Training config (INI)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--device", g.device, "Compute device")->check(CLI::IsMember({"cpu"}));
  app.add_flag("--toy", g.toy, "Tiny model preset for quick runs");

  MixArgs mix;
  auto* mix_cmd = app.add_subcommand("mix", "Render noisy/clean mixtures and a manifest");
  mix_cmd->add_option("--clean-dir", mix.clean_dir)->required()->check(CLI::ExistingDirectory);
  mix_cmd->add_option("--noise-dir", mix.noise_dir)->required()->check(CLI::ExistingDirectory);
  mix_cmd->add_option("--rir-dir", mix.rir_dir)->check(CLI::ExistingDirectory);
  mix_cmd->add_option("--out-dir", mix.out_dir)->required();
  mix_cmd->add_option("--count", mix.recipe.count)->required();
  mix_cmd->add_option("--duration", mix.recipe.duration, "Seconds per mixture");
  mix_cmd->add_option("--snr-min", mix.recipe.snr_min);
  mix_cmd->add_option("--snr-max", mix.recipe.snr_max);
  mix_cmd->add_option("--reverb-fraction", mix.recipe.reverb_fraction)->check(CLI::Range(0.0, 1.0));
  mix_cmd->add_option("--split", mix.split)->check(CLI::IsMember({"train", "eval"}));
  mix_cmd->add_flag("--anechoic-target", mix.recipe.anechoic_target, "Use dry speech as the target");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Run stage 1 or stage 2 training");
  train_cmd->add_option("--stage", train.stage)->check(CLI::IsMember({1, 2}));
  train_cmd->add_option("--manifest", train.manifest)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--audio-dir", train.audio_dir, "Defaults to the manifest directory");
  train_cmd->add_option("--out", train.out, "Checkpoint path")->required();
  train_cmd->add_option("--log", train.log, "Loss log (JSON lines)");
  train_cmd->add_option("--resume", train.resume)->check(CLI::ExistingFile);
  train_cmd->add_option("--disc-checkpoint", train.disc_checkpoint, "Stage-1 checkpoint (stage 2)");
  train_cmd->add_option("--conditioning", train.conditioning)->check(CLI::IsMember({"discogan", "nocogan"}));
  train_cmd->add_option("--gate", train.gate)->check(CLI::IsMember({"loss", "always", "never"}));
  train_cmd->add_option("--iterations", train.iterations);
  train_cmd->add_option("--batch-size", train.batch_size);
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every);
  train_cmd->add_option("--segment", train.segment, "Training crop in samples");

  ChainArgs enh_chain;
  std::string enh_in, enh_out;
  auto* enh_cmd = app.add_subcommand("enhance", "Enhance a WAV file or directory");
  enh_cmd->add_option("--input", enh_in)->required()->check(CLI::ExistingPath);
  enh_cmd->add_option("--out", enh_out)->required();
  enh_cmd->add_option("--chain", enh_chain.chain, "Stages, e.g. disc,gan");
  add_checkpoint_flags(enh_cmd, enh_chain);

  ChainArgs eval_chain;
  std::string eval_manifest, eval_audio, eval_report;
  auto* eval_cmd = app.add_subcommand("eval", "Score a chain on an eval manifest");
  eval_cmd->add_option("--manifest", eval_manifest)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--audio-dir", eval_audio);
  eval_cmd->add_option("--report", eval_report)->required();
  eval_cmd->add_option("--chain", eval_chain.chain);
  add_checkpoint_flags(eval_cmd, eval_chain);

  ChainArgs abl_chain;
  std::string abl_manifest, abl_audio, abl_out;
  auto* abl_cmd = app.add_subcommand("ablate", "Evaluate the five comparison configurations");
  abl_cmd->add_option("--manifest", abl_manifest)->required()->check(CLI::ExistingFile);
  abl_cmd->add_option("--audio-dir", abl_audio);
  abl_cmd->add_option("--out-dir", abl_out)->required();
  add_checkpoint_flags(abl_cmd, abl_chain);

  CLI11_PARSE(app, argc, argv);
  torch::set_num_threads(1);
  try {
    if (*mix_cmd) return cmd_mix(g, mix);
    if (*train_cmd) return cmd_train(g, train);
    if (*enh_cmd) return cmd_enhance(enh_chain, enh_in, enh_out);
    if (*eval_cmd) return cmd_eval(eval_chain, eval_manifest, eval_audio, eval_report);
    if (*abl_cmd) return cmd_ablate(abl_chain, abl_manifest, abl_audio, abl_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
