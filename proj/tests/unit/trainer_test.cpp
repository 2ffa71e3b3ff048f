// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>
#include <torch/torch.h>

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "discogan/dsp.hpp"
#include "discogan/trainer.hpp"
#include "support/synth.hpp"

namespace discogan {
namespace {

TrainingSet synthetic_set(int clips, int64_t length, uint64_t seed) {
  TrainingSet set;
  for (int i = 0; i < clips; ++i) {
    const double seconds = static_cast<double>(length) / kSampleRate;
    auto s = testing::harmonic_clip(seconds, 150.0 + 20.0 * i, seed + static_cast<uint64_t>(i));
    auto n = testing::noise_clip(seconds, seed + 40 + static_cast<uint64_t>(i), 0.1);
    auto x = s;
    for (std::size_t k = 0; k < x.size(); ++k) x.samples[k] += n.samples[k];
    set.noisy.push_back(to_tensor(x));
    set.clean.push_back(to_tensor(s));
    set.ids.push_back("clip" + std::to_string(i));
  }
  return set;
}

TrainConfig toy_config(int stage, int64_t iterations, int64_t batch = 2) {
  TrainConfig c;
  c.stage = stage;
  c.toy = true;
  c.iterations = iterations;
  c.batch_size = batch;
  c.checkpoint_every = iterations;
  c.seed = 5;
  return c;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::vector<std::string> lines;
  for (std::string line; std::getline(is, line);) lines.push_back(line);
  return lines;
}

FrozenDiscModel toy_frozen(uint64_t seed = 11) {
  torch::manual_seed(seed);
  return freeze(DiscModel(DiscModelConfig::toy()));
}

TEST(Gate, Examples) {
  EXPECT_TRUE(should_update_disc(2.0, 0.25));
  EXPECT_FALSE(should_update_disc(0.1, 0.25));
  EXPECT_FALSE(should_update_disc(0.25, 0.25));
  EXPECT_EQ(parse_gate_mode("never"), GateMode::kNever);
  EXPECT_EQ(parse_gate_mode(to_string(GateMode::kAlways)), GateMode::kAlways);
  EXPECT_THROW(parse_gate_mode("sometimes"), std::invalid_argument);
}

TEST(TrainConfigFile, ReadsIniSectionsAndKeepsDefaults) {
  testing::TempDir dir("ini");
  {
    std::ofstream os(dir / "run.ini");
    os << "[train]\nstage = 2\nbatch_size = 3\nlr = 0.001\nconditioning = nocogan\ngate = always\nsegment = 4000\n"
          "[model]\ntoy = true\n[loss]\nfeat = 2.5\n";
  }
  auto c = load_train_config(dir / "run.ini");
  EXPECT_EQ(c.stage, 2);
  EXPECT_EQ(c.batch_size, 3);
  EXPECT_DOUBLE_EQ(c.lr, 0.001);
  EXPECT_DOUBLE_EQ(c.beta1, 0.5);
  EXPECT_DOUBLE_EQ(c.beta2, 0.9);
  EXPECT_EQ(c.iterations, 600000);
  EXPECT_EQ(c.conditioning, Conditioning::kNone);
  EXPECT_EQ(c.gate, GateMode::kAlways);
  EXPECT_EQ(c.segment, 4000);
  EXPECT_TRUE(c.toy);
  EXPECT_DOUBLE_EQ(c.weights.feat, 2.5);
  EXPECT_DOUBLE_EQ(c.weights.adv, 1.0 / 9.0);
}

TEST(TrainConfigFile, RejectsBadValues) {
  testing::TempDir dir("ini_bad");
  {
    std::ofstream os(dir / "bad.ini");
    os << "[train]\nstage = 3\n";
  }
  EXPECT_THROW(load_train_config(dir / "bad.ini"), std::invalid_argument);
  {
    std::ofstream os(dir / "broken.ini");
    os << "[train\nstage\n";
  }
  EXPECT_THROW(load_train_config(dir / "broken.ini"), std::runtime_error);
}

TEST(BatchSampler, PureFunctionOfSeedAndStep) {
  BatchSampler a(7, 3, 42), b(7, 3, 42);
  for (int64_t step : {5, 0, 12, 3, 5}) EXPECT_EQ(a.indices(step), b.indices(step));
  BatchSampler c(7, 3, 43);
  bool differs = false;
  for (int64_t step = 0; step < 5; ++step) differs |= a.indices(step) != c.indices(step);
  EXPECT_TRUE(differs);
}

TEST(BatchSampler, EachEpochVisitsEveryClipOnce) {
  BatchSampler s(6, 2, 1);
  for (int64_t epoch = 0; epoch < 3; ++epoch) {
    std::multiset<std::size_t> seen;
    for (int64_t k = 0; k < 3; ++k)
      for (auto i : s.indices(epoch * 3 + k)) seen.insert(i);
    EXPECT_EQ(seen, (std::multiset<std::size_t>{0, 1, 2, 3, 4, 5}));
  }
}

TEST(BatchSampler, CropsToSegmentAtSeededOffsets) {
  auto data = synthetic_set(3, 6000, 1);
  BatchSampler s(3, 2, 9);
  auto b1 = s.batch(4, data, 2500);
  auto b2 = s.batch(4, data, 2500);
  EXPECT_EQ(b1.noisy.sizes(), (torch::IntArrayRef{2, 2500}));
  EXPECT_TRUE(torch::equal(b1.noisy, b2.noisy));
  EXPECT_TRUE(torch::equal(b1.clean, b2.clean));
  EXPECT_EQ(s.batch(0, data, 0).noisy.size(1), 6000);
  EXPECT_EQ(s.batch(0, data, 9000).noisy.size(1), 6000);
}

TEST(AdamState, ExportImportContinuesIdentically) {
  torch::manual_seed(3);
  auto w = torch::randn({4, 3}, torch::requires_grad());
  auto target = torch::randn({4, 3});
  TrainConfig cfg;
  auto step = [&](torch::optim::Adam& opt, torch::Tensor& p) {
    opt.zero_grad();
    (p - target).square().sum().backward();
    opt.step();
  };
  auto opt = make_adam({w}, cfg);
  for (int i = 0; i < 3; ++i) step(*opt, w);
  Checkpoint ckpt;
  export_adam(*opt, "opt.", ckpt);
  EXPECT_EQ(ckpt.arrays.at("opt.0.0.step").item<int64_t>(), 3);

  auto w2 = w.detach().clone().requires_grad_(true);
  auto opt2 = make_adam({w2}, cfg);
  import_adam(*opt2, "opt.", ckpt);
  step(*opt, w);
  step(*opt2, w2);
  EXPECT_TRUE(torch::equal(w, w2));
}

class Stage1Test : public ::testing::Test {
 protected:
  TrainingSet data_ = synthetic_set(4, 3200, 21);
  testing::TempDir dir_{"stage1"};
};

TEST_F(Stage1Test, SameSeedSameTrajectory) {
  auto cfg = toy_config(1, 6);
  auto a = train_stage1(data_, cfg, {dir_ / "a.ckpt", dir_ / "a.log", std::nullopt});
  auto b = train_stage1(data_, cfg, {dir_ / "b.ckpt", dir_ / "b.log", std::nullopt});
  EXPECT_EQ(a.losses, b.losses);
  EXPECT_EQ(fingerprint(*a.model), fingerprint(*b.model));
  EXPECT_EQ(read_lines(dir_ / "a.log"), read_lines(dir_ / "b.log"));
  auto lines = read_lines(dir_ / "a.log");
  ASSERT_EQ(lines.size(), 6u);
  auto rec = nlohmann::json::parse(lines.back());
  EXPECT_EQ(rec.at("step").get<int64_t>(), 6);
  EXPECT_EQ(rec.at("loss").get<double>(), a.losses.back());
  auto ckpt = load_checkpoint(dir_ / "a.ckpt");
  EXPECT_EQ(ckpt.meta.at("train").at("step").get<int64_t>(), 6);
}

TEST_F(Stage1Test, ResumeMatchesUninterruptedRun) {
  auto full_cfg = toy_config(1, 6);
  auto full = train_stage1(data_, full_cfg, {dir_ / "full.ckpt", dir_ / "full.log", std::nullopt});

  auto half_cfg = toy_config(1, 3);
  half_cfg.iterations = 3;
  half_cfg.checkpoint_every = 3;
  train_stage1(data_, half_cfg, {dir_ / "part.ckpt", dir_ / "part.log", std::nullopt});
  auto rest = train_stage1(data_, full_cfg, {dir_ / "rest.ckpt", dir_ / "part.log", dir_ / "part.ckpt"});

  ASSERT_EQ(rest.losses.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(rest.losses[i], full.losses[3 + i]);
  EXPECT_EQ(fingerprint(*rest.model), fingerprint(*full.model));
  EXPECT_EQ(read_lines(dir_ / "part.log"), read_lines(dir_ / "full.log"));
}

TEST_F(Stage1Test, NonFiniteLossReportsLastGoodCheckpoint) {
  auto data = synthetic_set(2, 3200, 3);
  auto cfg = toy_config(1, 4, 1);
  cfg.checkpoint_every = 1;
  BatchSampler sampler(2, 1, cfg.seed);
  int64_t bad_step = 0;
  for (int64_t k = 0; bad_step == 0; ++k)
    if (sampler.indices(k).front() == 1) bad_step = k + 1;
  data.clean[1] = torch::full_like(data.clean[1], std::nan(""));
  try {
    train_stage1(data, cfg, {dir_ / "d.ckpt", dir_ / "d.log", std::nullopt});
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_NE(std::string(e.what()).find("at step " + std::to_string(bad_step)), std::string::npos);
    EXPECT_EQ(e.last_good_checkpoint, bad_step == 1 ? std::string() : (dir_ / "d.ckpt").string());
  }
}

class Stage2Test : public ::testing::Test {
 protected:
  TrainingSet data_ = synthetic_set(3, 2400, 31);
  testing::TempDir dir_{"stage2"};
};

TEST_F(Stage2Test, RecordsAndGateFollowLosses) {
  auto cfg = toy_config(2, 4);
  auto result = train_stage2(data_, cfg, toy_frozen(), {dir_ / "g.ckpt", dir_ / "g.log", std::nullopt});
  ASSERT_EQ(result.records.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& r = result.records[i];
    EXPECT_EQ(r.step, static_cast<int64_t>(i + 1));
    EXPECT_EQ(r.disc_updated, r.l_disc > r.losses.l_adv);
    EXPECT_GE(r.losses.l_t, 0.0);
    EXPECT_GE(r.losses.l_f, 0.0);
    EXPECT_GE(r.losses.l_adv, 0.0);
    EXPECT_GE(r.losses.l_feat, 0.0);
    EXPECT_DOUBLE_EQ(r.losses.total, r.losses.l_t + r.losses.l_f + r.losses.l_adv / 9.0 + r.losses.l_feat * 100.0 / 9.0);
  }
  auto lines = read_lines(dir_ / "g.log");
  ASSERT_EQ(lines.size(), 4u);
  auto j = nlohmann::json::parse(lines[2]);
  for (const char* key : {"step", "l_t", "l_f", "l_adv", "l_feat", "total", "l_disc", "disc_updated"})
    EXPECT_TRUE(j.contains(key)) << key;
  std::string fp;
  load_generator(dir_ / "g.ckpt", &fp);
  EXPECT_EQ(fp, result.state.frozen->fingerprint());
}

TEST_F(Stage2Test, FrozenModelUntouchedByGanSteps) {
  auto cfg = toy_config(2, 100, 1);
  cfg.gate = GateMode::kAlways;
  cfg.segment = 2048;
  auto frozen = toy_frozen();
  const auto before = frozen.fingerprint();
  auto result = train_stage2(data_, cfg, std::move(frozen), {dir_ / "f.ckpt", dir_ / "f.log", std::nullopt});
  EXPECT_EQ(result.state.frozen->current_fingerprint(), before);
  for (const auto& p : result.state.frozen->model()->parameters()) EXPECT_FALSE(p.grad().defined());
}

TEST_F(Stage2Test, GateNeverKeepsCriticFixed) {
  auto cfg = toy_config(2, 3);
  cfg.gate = GateMode::kNever;
  auto initial = make_stage2_state(cfg, toy_frozen());
  const auto adv_before = fingerprint(*initial.adv);
  const auto gen_before = fingerprint(*initial.gen);
  auto result = train_stage2(data_, cfg, toy_frozen(), {dir_ / "n.ckpt", dir_ / "n.log", std::nullopt});
  EXPECT_EQ(fingerprint(*result.state.adv), adv_before);
  EXPECT_NE(fingerprint(*result.state.gen), gen_before);
  for (const auto& r : result.records) EXPECT_FALSE(r.disc_updated);

  cfg.gate = GateMode::kAlways;
  auto always = train_stage2(data_, cfg, toy_frozen(), {dir_ / "a.ckpt", dir_ / "a.log", std::nullopt});
  EXPECT_NE(fingerprint(*always.state.adv), adv_before);
}

TEST_F(Stage2Test, ResumeMatchesUninterruptedRun) {
  auto cfg = toy_config(2, 4);
  cfg.gate = GateMode::kAlways;
  auto full = train_stage2(data_, cfg, toy_frozen(), {dir_ / "full.ckpt", dir_ / "full.log", std::nullopt});
  auto half = cfg;
  half.iterations = 2;
  half.checkpoint_every = 2;
  train_stage2(data_, half, toy_frozen(), {dir_ / "part.ckpt", dir_ / "part.log", std::nullopt});
  auto rest = train_stage2(data_, cfg, toy_frozen(), {dir_ / "rest.ckpt", dir_ / "part.log", dir_ / "part.ckpt"});
  ASSERT_EQ(rest.records.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(rest.records[i].step, full.records[2 + i].step);
    EXPECT_EQ(rest.records[i].losses.total, full.records[2 + i].losses.total);
    EXPECT_EQ(rest.records[i].l_disc, full.records[2 + i].l_disc);
  }
  EXPECT_EQ(fingerprint(*rest.state.gen), fingerprint(*full.state.gen));
  EXPECT_EQ(fingerprint(*rest.state.adv), fingerprint(*full.state.adv));
  EXPECT_EQ(read_lines(dir_ / "part.log"), read_lines(dir_ / "full.log"));
}

TEST_F(Stage2Test, ResumeRejectsDifferentDiscModel) {
  auto cfg = toy_config(2, 1);
  train_stage2(data_, cfg, toy_frozen(11), {dir_ / "x.ckpt", dir_ / "x.log", std::nullopt});
  cfg.iterations = 2;
  EXPECT_THROW(train_stage2(data_, cfg, toy_frozen(12), {dir_ / "y.ckpt", dir_ / "y.log", dir_ / "x.ckpt"}),
               std::runtime_error);
}

TEST_F(Stage2Test, ConditionedWithoutDiscModelIsRejected) {
  auto cfg = toy_config(2, 1);
  EXPECT_THROW(make_stage2_state(cfg, std::nullopt), std::invalid_argument);
  cfg.conditioning = Conditioning::kNone;
  auto state = make_stage2_state(cfg, std::nullopt);
  EXPECT_FALSE(state.gen->conditioned());
}

TEST_F(Stage2Test, NonFiniteTargetDiverges) {
  auto data = data_;
  for (auto& c : data.clean) c = torch::full_like(c, std::nan(""));
  auto cfg = toy_config(2, 2);
  cfg.conditioning = Conditioning::kNone;
  try {
    train_stage2(data, cfg, std::nullopt, {dir_ / "z.ckpt", dir_ / "z.log", std::nullopt});
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_NE(std::string(e.what()).find("non-finite loss term"), std::string::npos);
    EXPECT_TRUE(e.last_good_checkpoint.empty());
  }
}

}  // namespace
}  // namespace discogan
