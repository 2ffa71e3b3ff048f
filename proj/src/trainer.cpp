// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "discogan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "discogan/audio.hpp"
#include "discogan/dsp.hpp"

namespace discogan {

std::string to_string(GateMode g) {
  switch (g) {
    case GateMode::kLoss: return "loss";
    case GateMode::kAlways: return "always";
    case GateMode::kNever: return "never";
  }
  return "loss";
}

GateMode parse_gate_mode(const std::string& name) {
  if (name == "loss") return GateMode::kLoss;
  if (name == "always") return GateMode::kAlways;
  if (name == "never") return GateMode::kNever;
  throw std::invalid_argument("unknown gate mode '" + name + "' (expected loss, always or never)");
}

ModelPreset ModelPreset::paper() { return {DiscModelConfig::paper(), GeneratorConfig::paper(), MsStftConfig::paper()}; }

ModelPreset ModelPreset::toy() { return {DiscModelConfig::toy(), GeneratorConfig::toy(), MsStftConfig::toy()}; }

void TrainConfig::validate() const {
  if (stage != 1 && stage != 2) throw std::invalid_argument("train: stage must be 1 or 2");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
  if (iterations < 0) throw std::invalid_argument("train: iterations must be >= 0");
  if (checkpoint_every < 1) throw std::invalid_argument("train: checkpoint_every must be >= 1");
  if (segment < 0) throw std::invalid_argument("train: segment must be >= 0");
  for (double w : {weights.time, weights.freq, weights.adv, weights.feat})
    if (!(w >= 0.0)) throw std::invalid_argument("train: loss weights must be >= 0");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"stage", c.stage},
       {"batch_size", c.batch_size},
       {"iterations", c.iterations},
       {"lr", c.lr},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"seed", c.seed},
       {"checkpoint_every", c.checkpoint_every},
       {"conditioning", to_string(c.conditioning)},
       {"gate", to_string(c.gate)},
       {"segment", c.segment},
       {"toy", c.toy},
       {"weights", {c.weights.time, c.weights.freq, c.weights.adv, c.weights.feat}}};
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig c) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::runtime_error("config " + path.string() + ": " + e.what());
  }
  c.stage = pt.get("train.stage", c.stage);
  c.batch_size = pt.get("train.batch_size", c.batch_size);
  c.iterations = pt.get("train.iterations", c.iterations);
  c.lr = pt.get("train.lr", c.lr);
  c.beta1 = pt.get("train.beta1", c.beta1);
  c.beta2 = pt.get("train.beta2", c.beta2);
  c.seed = pt.get("train.seed", c.seed);
  c.checkpoint_every = pt.get("train.checkpoint_every", c.checkpoint_every);
  c.conditioning = parse_conditioning(pt.get("train.conditioning", to_string(c.conditioning)));
  c.gate = parse_gate_mode(pt.get("train.gate", to_string(c.gate)));
  c.segment = pt.get("train.segment", c.segment);
  c.toy = pt.get("model.toy", c.toy);
  c.weights.time = pt.get("loss.time", c.weights.time);
  c.weights.freq = pt.get("loss.freq", c.weights.freq);
  c.weights.adv = pt.get("loss.adv", c.weights.adv);
  c.weights.feat = pt.get("loss.feat", c.weights.feat);
  c.validate();
  return c;
}

int64_t TrainingSet::shortest() const {
  if (noisy.empty()) throw std::invalid_argument("training set is empty");
  int64_t n = std::numeric_limits<int64_t>::max();
  for (const auto& x : noisy) n = std::min(n, x.size(0));
  return n;
}

TrainingSet load_training_set(const DatasetManifest& manifest, const std::filesystem::path& audio_dir) {
  if (manifest.entries.empty()) throw std::invalid_argument("manifest has no entries");
  TrainingSet set;
  for (const auto& e : manifest.entries) {
    auto noisy = read_wav(noisy_path(audio_dir, e.id));
    auto clean = read_wav(clean_path(audio_dir, e.id));
    if (noisy.size() != clean.size()) throw std::runtime_error("clip " + e.id + ": noisy/clean length mismatch");
    set.noisy.push_back(to_tensor(noisy));
    set.clean.push_back(to_tensor(clean));
    set.ids.push_back(e.id);
  }
  return set;
}

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

BatchSampler::BatchSampler(std::size_t clips, int64_t batch_size, uint64_t seed)
    : clips_(clips), batch_size_(batch_size), seed_(seed) {
  if (clips_ == 0) throw std::invalid_argument("sampler: no clips");
  if (batch_size_ < 1) throw std::invalid_argument("sampler: batch_size must be >= 1");
}

const std::vector<std::size_t>& BatchSampler::permutation(int64_t epoch) const {
  auto it = perms_.find(epoch);
  if (it != perms_.end()) return it->second;
  std::vector<std::size_t> perm(clips_);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(splitmix64(seed_ ^ splitmix64(static_cast<uint64_t>(epoch))));
  std::shuffle(perm.begin(), perm.end(), rng);
  if (perms_.size() > 4) perms_.erase(perms_.begin());
  return perms_.emplace(epoch, std::move(perm)).first->second;
}

std::vector<std::size_t> BatchSampler::indices(int64_t step) const {
  if (step < 0) throw std::invalid_argument("sampler: negative step");
  std::vector<std::size_t> out;
  const auto n = static_cast<int64_t>(clips_);
  for (int64_t i = 0; i < batch_size_; ++i) {
    const int64_t pos = step * batch_size_ + i;
    out.push_back(permutation(pos / n)[static_cast<std::size_t>(pos % n)]);
  }
  return out;
}

Batch BatchSampler::batch(int64_t step, const TrainingSet& data, int64_t segment) const {
  if (data.size() != clips_) throw std::invalid_argument("sampler: training set size changed");
  const int64_t shortest = data.shortest();
  const int64_t len = segment > 0 ? std::min(segment, shortest) : shortest;
  std::vector<torch::Tensor> noisy, clean;
  int64_t slot = 0;
  for (std::size_t idx : indices(step)) {
    const int64_t avail = data.noisy[idx].size(0) - len;
    int64_t offset = 0;
    if (avail > 0) {
      const auto key = static_cast<uint64_t>(step * batch_size_ + slot);
      offset = static_cast<int64_t>(splitmix64(seed_ ^ (key * 0xD1B54A32D192ED03ULL)) %
                                    static_cast<uint64_t>(avail + 1));
    }
    noisy.push_back(data.noisy[idx].narrow(0, offset, len));
    clean.push_back(data.clean[idx].narrow(0, offset, len));
    ++slot;
  }
  return {torch::stack(noisy), torch::stack(clean)};
}

bool should_update_disc(double l_disc_train, double l_adv_gen) { return l_disc_train > l_adv_gen; }

std::unique_ptr<torch::optim::Adam> make_adam(const std::vector<torch::Tensor>& params, const TrainConfig& cfg) {
  torch::optim::AdamOptions opts(cfg.lr);
  opts.betas({cfg.beta1, cfg.beta2});
  return std::make_unique<torch::optim::Adam>(params, opts);
}

void export_adam(const torch::optim::Adam& opt, const std::string& prefix, Checkpoint& ckpt) {
  const auto& groups = opt.param_groups();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& params = groups[g].params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto it = opt.state().find(params[i].unsafeGetTensorImpl());
      if (it == opt.state().end()) continue;
      const auto& st = static_cast<const torch::optim::AdamParamState&>(*it->second);
      const std::string key = prefix + std::to_string(g) + "." + std::to_string(i) + ".";
      ckpt.arrays[key + "step"] = torch::tensor({st.step()}, torch::kInt64);
      ckpt.arrays[key + "exp_avg"] = st.exp_avg().detach().clone();
      ckpt.arrays[key + "exp_avg_sq"] = st.exp_avg_sq().detach().clone();
    }
  }
}

void import_adam(torch::optim::Adam& opt, const std::string& prefix, const Checkpoint& ckpt) {
  opt.state().clear();
  auto& groups = opt.param_groups();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& params = groups[g].params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string key = prefix + std::to_string(g) + "." + std::to_string(i) + ".";
      auto step_it = ckpt.arrays.find(key + "step");
      if (step_it == ckpt.arrays.end()) continue;
      auto st = std::make_unique<torch::optim::AdamParamState>();
      st->step(step_it->second.item<int64_t>());
      const auto& avg = ckpt.arrays.at(key + "exp_avg");
      const auto& avg_sq = ckpt.arrays.at(key + "exp_avg_sq");
      if (avg.sizes() != params[i].sizes()) throw std::runtime_error("optimizer state shape mismatch at " + key);
      st->exp_avg(avg.to(params[i].dtype()).clone());
      st->exp_avg_sq(avg_sq.to(params[i].dtype()).clone());
      opt.state()[params[i].unsafeGetTensorImpl()] = std::move(st);
    }
  }
}

namespace {

std::ofstream open_log(const RunPaths& paths) {
  if (paths.log.has_parent_path()) std::filesystem::create_directories(paths.log.parent_path());
  std::ofstream log(paths.log, paths.resume ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot open log " + paths.log.string());
  return log;
}

nlohmann::json train_meta(const TrainConfig& cfg, int64_t step) { return {{"step", step}, {"config", cfg}}; }

void ensure_parent(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

}  // namespace

Stage1Result train_stage1(const TrainingSet& data, const TrainConfig& cfg, const RunPaths& paths) {
  cfg.validate();
  if (data.size() == 0) throw std::invalid_argument("stage 1: empty training set");
  torch::manual_seed(cfg.seed);
  Stage1Result result;
  std::optional<Checkpoint> resume;
  if (paths.resume) {
    resume = load_checkpoint(*paths.resume);
    result.model = disc_model_from_checkpoint(*resume);
  } else {
    result.model = DiscModel(cfg.preset().disc);
  }
  auto opt = make_adam(result.model->parameters(), cfg);
  int64_t start = 0;
  if (resume) {
    import_adam(*opt, "opt.", *resume);
    start = resume->meta.at("train").at("step").get<int64_t>();
  }

  ensure_parent(paths.checkpoint);
  auto log = open_log(paths);
  BatchSampler sampler(data.size(), cfg.batch_size, cfg.seed);
  std::string last_good = resume ? paths.resume->string() : "";
  for (int64_t step = start + 1; step <= cfg.iterations; ++step) {
    auto batch = sampler.batch(step - 1, data, cfg.segment);
    double loss = 0.0;
    try {
      loss = train_disc_step(result.model, *opt, batch.noisy, batch.clean);
    } catch (const std::runtime_error& e) {
      throw TrainingDiverged(std::string(e.what()) + " at step " + std::to_string(step), last_good);
    }
    result.losses.push_back(loss);
    log << nlohmann::json{{"step", step}, {"loss", loss}}.dump() << '\n';
    if (step % cfg.checkpoint_every == 0 || step == cfg.iterations) {
      auto ckpt = disc_model_checkpoint(result.model, {{"train", train_meta(cfg, step)}});
      export_adam(*opt, "opt.", ckpt);
      save_checkpoint(paths.checkpoint, ckpt);
      last_good = paths.checkpoint.string();
      log.flush();
    }
  }
  return result;
}

Stage2State make_stage2_state(const TrainConfig& cfg, std::optional<FrozenDiscModel> frozen) {
  cfg.validate();
  auto preset = cfg.preset();
  preset.gen.conditioning = cfg.conditioning;
  if (cfg.conditioning == Conditioning::kDiscriminative) {
    if (!frozen) throw std::invalid_argument("stage 2: conditioned generator needs a frozen disc model");
    preset.gen.disc_latent_dim = frozen->config().latent_dim();
  }
  torch::manual_seed(cfg.seed);
  Stage2State state;
  state.gen = Generator(preset.gen);
  state.adv = MsStftDiscriminator(preset.adv);
  state.frozen = std::move(frozen);
  state.gen_opt = make_adam(state.gen->parameters(), cfg);
  state.adv_opt = make_adam(state.adv->parameters(), cfg);
  return state;
}

nlohmann::json to_json(const StepRecord& r) {
  return {{"step", r.step},
          {"l_t", r.losses.l_t},
          {"l_f", r.losses.l_f},
          {"l_adv", r.losses.l_adv},
          {"l_feat", r.losses.l_feat},
          {"total", r.losses.total},
          {"l_disc", r.l_disc},
          {"disc_updated", r.disc_updated}};
}

StepRecord train_stage2_step(const Batch& batch, Stage2State& state, const TrainConfig& cfg) {
  auto& gen = state.gen;
  auto& adv = state.adv;
  gen->train();
  adv->train();
  const auto dtype = gen->parameters().front().scalar_type();
  auto noisy = batch.noisy.to(dtype);
  auto clean = batch.clean.to(dtype);

  std::optional<torch::Tensor> disc_latents;
  if (gen->conditioned()) {
    if (!state.frozen) throw std::invalid_argument("stage 2: conditioned generator needs a frozen disc model");
    disc_latents = state.frozen->forward(batch.noisy).latents.to(dtype);
  }
  auto enhanced = gen->forward(noisy, disc_latents);
  auto fake = adv->forward(enhanced);
  auto real = adv->forward(clean);
  DiscOutputs real_targets;
  for (const auto& feats : real.features) {
    std::vector<torch::Tensor> detached;
    for (const auto& f : feats) detached.push_back(f.detach());
    real_targets.features.push_back(std::move(detached));
  }

  auto l_t = time_loss(clean, enhanced);
  auto l_f = freq_loss(clean, enhanced);
  auto l_adv = gen_adv_loss(fake);
  auto l_feat = feat_match_loss(real_targets, fake);

  StepRecord rec;
  rec.step = state.step + 1;
  rec.losses = total_gen_loss({l_t.item<double>(), l_f.item<double>(), l_adv.item<double>(), l_feat.item<double>()},
                              cfg.weights);
  auto l_disc = disc_train_loss(real, fake);
  rec.l_disc = l_disc.item<double>();
  if (!std::isfinite(rec.l_disc)) throw std::domain_error("non-finite loss term l_disc");
  rec.disc_updated =
      cfg.gate == GateMode::kAlways || (cfg.gate == GateMode::kLoss && should_update_disc(rec.l_disc, rec.losses.l_adv));

  auto adv_params = adv->parameters();
  std::vector<torch::Tensor> adv_grads;
  if (rec.disc_updated) adv_grads = torch::autograd::grad({l_disc}, adv_params, {}, /*retain_graph=*/true);

  auto total = weighted_gen_loss(l_t, l_f, l_adv, l_feat, cfg.weights);
  state.gen_opt->zero_grad();
  total.backward();
  state.gen_opt->step();

  state.adv_opt->zero_grad();
  if (rec.disc_updated) {
    for (std::size_t i = 0; i < adv_params.size(); ++i) adv_params[i].mutable_grad() = adv_grads[i];
    state.adv_opt->step();
  }
  state.step = rec.step;
  return rec;
}

Checkpoint stage2_checkpoint(const Stage2State& state, const TrainConfig& cfg) {
  const std::string disc_fp = state.gen->conditioned() && state.frozen ? state.frozen->fingerprint() : "";
  auto ckpt = generator_checkpoint(state.gen, disc_fp,
                                   {{"train", train_meta(cfg, state.step)}, {"adversary", state.adv->config()}});
  export_module(*state.adv, "adv.", ckpt);
  export_adam(*state.gen_opt, "opt.gen.", ckpt);
  export_adam(*state.adv_opt, "opt.adv.", ckpt);
  return ckpt;
}

void restore_stage2(Stage2State& state, const Checkpoint& ckpt) {
  if (ckpt.meta.value("kind", "") != "generator") throw std::runtime_error("checkpoint does not hold a generator");
  if (ckpt.meta.at("config").get<GeneratorConfig>().conditioning != state.gen->config().conditioning)
    throw std::runtime_error("resume checkpoint has a different conditioning mode");
  if (state.gen->conditioned() && state.frozen &&
      ckpt.meta.value("disc_fingerprint", "") != state.frozen->fingerprint())
    throw std::runtime_error("resume checkpoint was trained against a different disc model");
  import_module(*state.gen, "gen.", ckpt);
  import_module(*state.adv, "adv.", ckpt);
  import_adam(*state.gen_opt, "opt.gen.", ckpt);
  import_adam(*state.adv_opt, "opt.adv.", ckpt);
  state.step = ckpt.meta.at("train").at("step").get<int64_t>();
}

Stage2Result train_stage2(const TrainingSet& data, const TrainConfig& cfg, std::optional<FrozenDiscModel> frozen,
                          const RunPaths& paths) {
  if (data.size() == 0) throw std::invalid_argument("stage 2: empty training set");
  Stage2Result result{make_stage2_state(cfg, std::move(frozen)), {}};
  auto& state = result.state;
  std::string last_good;
  if (paths.resume) {
    restore_stage2(state, load_checkpoint(*paths.resume));
    last_good = paths.resume->string();
  }
  ensure_parent(paths.checkpoint);
  auto log = open_log(paths);
  BatchSampler sampler(data.size(), cfg.batch_size, cfg.seed);
  while (state.step < cfg.iterations) {
    auto batch = sampler.batch(state.step, data, cfg.segment);
    StepRecord rec;
    try {
      rec = train_stage2_step(batch, state, cfg);
    } catch (const std::domain_error& e) {
      throw TrainingDiverged(std::string(e.what()) + " at step " + std::to_string(state.step + 1), last_good);
    }
    log << to_json(rec).dump() << '\n';
    result.records.push_back(rec);
    if (state.step % cfg.checkpoint_every == 0 || state.step == cfg.iterations) {
      save_checkpoint(paths.checkpoint, stage2_checkpoint(state, cfg));
      last_good = paths.checkpoint.string();
      log.flush();
    }
  }
  return result;
}

}  // namespace discogan
