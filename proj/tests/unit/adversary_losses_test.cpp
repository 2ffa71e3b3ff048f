// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>
#include <torch/torch.h>

#include <cmath>
#include <limits>

#include "discogan/adversary.hpp"
#include "discogan/dsp.hpp"
#include "discogan/losses.hpp"

namespace discogan {
namespace {

DiscOutputs constant_logits(std::vector<double> values, int64_t frames = 3, int64_t bins = 4) {
  DiscOutputs out;
  for (double v : values) {
    auto l = torch::full({1, 1, frames, bins}, v, torch::kFloat64);
    out.logits.push_back(l);
    out.features.push_back({l});
  }
  return out;
}

DiscOutputs random_outputs(int64_t scales, int64_t layers, uint64_t seed) {
  torch::manual_seed(seed);
  DiscOutputs out;
  for (int64_t k = 0; k < scales; ++k) {
    std::vector<torch::Tensor> feats;
    for (int64_t l = 0; l < layers; ++l)
      feats.push_back(torch::randn({2, l + 1 == layers ? 1 : l + 2, 3 + k, 5 - k % 2}, torch::kFloat64));
    out.logits.push_back(feats.back());
    out.features.push_back(feats);
  }
  return out;
}

TEST(MsStft, PaperStructureAndFrameCounts) {
  torch::manual_seed(1);
  MsStftDiscriminator d(MsStftConfig::paper());
  torch::NoGradGuard ng;
  const int64_t n = 4000;
  auto out = d(torch::randn({2, n}) * 0.1);
  ASSERT_EQ(out.logits.size(), 5u);
  ASSERT_EQ(out.features.size(), 5u);
  const auto& scales = d->config().scales;
  for (std::size_t k = 0; k < 5; ++k) {
    ASSERT_EQ(out.features[k].size(), 5u);
    EXPECT_TRUE(out.features[k].back().is_same(out.logits[k]));
    EXPECT_EQ(out.logits[k].size(0), 2);
    EXPECT_EQ(out.logits[k].size(1), 1);
    EXPECT_EQ(out.logits[k].size(2), 1 + n / (scales[k] / 4));
    EXPECT_EQ(frame_logits(out.logits[k]).sizes(), (torch::IntArrayRef{2, out.logits[k].size(2)}));
  }
}

TEST(MsStft, ZeroClipWithZeroBiasesGivesZeroLogits) {
  MsStftDiscriminator d(MsStftConfig::toy());
  {
    torch::NoGradGuard ng;
    for (auto& p : d->named_parameters())
      if (p.key().ends_with("bias")) p.value().zero_();
  }
  torch::NoGradGuard ng;
  auto out = d(torch::zeros({1, 2048}));
  for (const auto& l : out.logits) EXPECT_TRUE(torch::equal(l, torch::zeros_like(l)));
}

TEST(MsStft, ShortClipThrows) {
  MsStftDiscriminator d(MsStftConfig::paper());
  EXPECT_THROW(d(torch::zeros({1, 2047})), std::invalid_argument);
}

TEST(GenAdvLoss, Examples) {
  EXPECT_DOUBLE_EQ(gen_adv_loss(constant_logits({2.0})).item<double>(), 0.0);
  EXPECT_DOUBLE_EQ(gen_adv_loss(constant_logits({-1.0, -1.0})).item<double>(), 2.0);
  EXPECT_DOUBLE_EQ(gen_adv_loss(constant_logits({0.5, 1.5})).item<double>(), 0.25);
}

TEST(GenAdvLoss, UsesFrequencyMeanPerFrame) {
  DiscOutputs out;
  // Frame 0 bins {3, -1} average to 1 (hinge 0); frame 1 bins {0, 0} give 1.
  auto l = torch::tensor({3.0, -1.0, 0.0, 0.0}, torch::kFloat64).reshape({1, 1, 2, 2});
  out.logits = {l};
  out.features = {{l}};
  EXPECT_DOUBLE_EQ(gen_adv_loss(out).item<double>(), 0.5);
}

TEST(GenAdvLoss, MonotoneThenFlat) {
  double prev = std::numeric_limits<double>::infinity();
  for (double v = -3.0; v <= 1.0; v += 0.25) {
    const double now = gen_adv_loss(constant_logits({v})).item<double>();
    EXPECT_LT(now, prev);
    prev = now;
  }
  EXPECT_DOUBLE_EQ(gen_adv_loss(constant_logits({1.5})).item<double>(), 0.0);
}

TEST(FeatMatchLoss, Examples) {
  auto real = random_outputs(2, 3, 4);
  EXPECT_DOUBLE_EQ(feat_match_loss(real, real).item<double>(), 0.0);

  DiscOutputs a, b;
  auto f = torch::randn({1, 3, 2, 1}, torch::kFloat64);
  a.features = {{f}};
  a.logits = {f};
  b.features = {{f + 1.0}};
  b.logits = {f + 1.0};
  EXPECT_NEAR(feat_match_loss(a, b).item<double>(), 3.0, 1e-12);
  EXPECT_NEAR(feat_match_loss(b, a).item<double>(), 3.0, 1e-12);
}

TEST(FeatMatchLoss, MatchesScalarLoop) {
  auto real = random_outputs(3, 4, 5);
  auto fake = random_outputs(3, 4, 6);
  double total = 0.0;
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t l = 0; l < 4; ++l) {
      auto diff = (real.features[k][l] - fake.features[k][l]).contiguous();
      auto acc = diff.accessor<double, 4>();
      const int64_t B = diff.size(0), C = diff.size(1), T = diff.size(2), F = diff.size(3);
      for (int64_t bi = 0; bi < B; ++bi) {
        double per_row = 0.0;
        for (int64_t t = 0; t < T; ++t) {
          double frame = 0.0;
          for (int64_t c = 0; c < C; ++c)
            for (int64_t fi = 0; fi < F; ++fi) frame += std::abs(acc[bi][c][t][fi]);
          per_row += frame / static_cast<double>(T);
        }
        total += per_row / static_cast<double>(B);
      }
    }
  EXPECT_NEAR(feat_match_loss(real, fake).item<double>(), total / 12.0, 1e-9);
}

TEST(FeatMatchLoss, StructureMismatchThrows) {
  auto a = random_outputs(2, 3, 1);
  auto b = random_outputs(3, 3, 1);
  EXPECT_THROW(feat_match_loss(a, b), std::invalid_argument);
  auto c = random_outputs(2, 2, 1);
  EXPECT_THROW(feat_match_loss(a, c), std::invalid_argument);
}

TEST(DiscTrainLoss, Examples) {
  EXPECT_DOUBLE_EQ(disc_train_loss(constant_logits({2.0, 2.0}), constant_logits({-2.0, -2.0})).item<double>(), 0.0);
  EXPECT_DOUBLE_EQ(disc_train_loss(constant_logits({0.0}), constant_logits({0.0})).item<double>(), 2.0);
}

TEST(DiscTrainLoss, MatchesScalarLoop) {
  auto real = random_outputs(4, 2, 7);
  auto fake = random_outputs(4, 2, 8);
  double total = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    auto r = real.logits[k].contiguous(), f = fake.logits[k].contiguous();
    auto ra = r.accessor<double, 4>(), fa = f.accessor<double, 4>();
    const int64_t B = r.size(0), T = r.size(2), F = r.size(3);
    for (int64_t b = 0; b < B; ++b)
      for (int64_t t = 0; t < T; ++t) {
        double dr = 0.0, df = 0.0;
        for (int64_t c = 0; c < r.size(1); ++c)
          for (int64_t i = 0; i < F; ++i) dr += ra[b][c][t][i] / F, df += fa[b][c][t][i] / F;
        total += (std::max(0.0, 1.0 - dr) + std::max(0.0, 1.0 + df)) / static_cast<double>(T * B);
      }
  }
  EXPECT_NEAR(disc_train_loss(real, fake).item<double>(), total / 4.0, 1e-9);
}

TEST(TimeLoss, Examples) {
  auto s = torch::tensor({1.0, 1.0}, torch::kFloat64);
  auto z = torch::zeros({2}, torch::kFloat64);
  EXPECT_DOUBLE_EQ(time_loss(s, s).item<double>(), 0.0);
  EXPECT_DOUBLE_EQ(time_loss(s, z).item<double>(), 1.0);
  EXPECT_DOUBLE_EQ(time_loss(z, s).item<double>(), 1.0);
  EXPECT_THROW(time_loss(s, torch::zeros({3}, torch::kFloat64)), std::invalid_argument);
}

TEST(FreqLoss, ZeroOnIdenticalInputs) {
  auto s = torch::randn({2, 4000}, torch::kFloat64);
  EXPECT_EQ(freq_loss(s, s).item<double>(), 0.0);
}

TEST(FreqLoss, ResolutionsAndMelCaps) {
  SpectralLossConfig cfg;
  EXPECT_EQ(cfg.exponents, (std::vector<int64_t>{5, 6, 7, 8, 9, 10}));
  EXPECT_EQ(cfg.min_length(), 1024);
  EXPECT_EQ(cfg.mels_for(32), 16);
  EXPECT_EQ(cfg.mels_for(64), 32);
  EXPECT_EQ(cfg.mels_for(128), 64);
  EXPECT_EQ(cfg.mels_for(1024), 64);
}

TEST(FreqLoss, MatchesPerResolutionFormula) {
  torch::manual_seed(2);
  auto s = torch::randn({3000}, torch::kFloat64) * 0.1;
  auto e = s + torch::randn({3000}, torch::kFloat64) * 0.05;
  SpectralLossConfig cfg;
  double total = 0.0;
  for (int64_t ex : cfg.exponents) {
    const int64_t w = int64_t{1} << ex;
    auto ps = log_power_spectrogram(s, w) - log_power_spectrogram(e, w);
    auto ms = mel_spectrogram(s, w, cfg.mels_for(w)) - mel_spectrogram(e, w, cfg.mels_for(w));
    total += ps.abs().mean().item<double>() + std::sqrt(ps.square().mean().item<double>()) +
             ms.abs().mean().item<double>() + std::sqrt(ms.square().mean().item<double>());
  }
  EXPECT_NEAR(freq_loss(s, e).item<double>(), total / 6.0, 1e-9);
}

TEST(FreqLoss, PositiveOnDistinctRandomPairs) {
  torch::manual_seed(3);
  for (int i = 0; i < 100; ++i) {
    auto s = torch::randn({1024}, torch::kFloat64);
    auto e = torch::randn({1024}, torch::kFloat64);
    EXPECT_GT(freq_loss(s, e).item<double>(), 0.0);
  }
}

TEST(FreqLoss, ShortClipThrows) {
  auto s = torch::zeros({1023}, torch::kFloat64);
  EXPECT_THROW(freq_loss(s, s), std::invalid_argument);
}

TEST(TotalGenLoss, Examples) {
  auto b = total_gen_loss(LossParts{1.0, 1.0, 9.0, 0.09});
  EXPECT_NEAR(b.total, 4.0, 1e-12);
  EXPECT_EQ(b.l_adv, 9.0);
  EXPECT_EQ(b.l_feat, 0.09);
  EXPECT_EQ(total_gen_loss(LossParts{}).total, 0.0);
  EXPECT_EQ(total_gen_loss(LossParts{3.0, 2.0, 1.0, 5.0}, LossWeights{0.0, 0.0, 0.0, 0.0}).total, 0.0);
}

TEST(TotalGenLoss, NamesTheNonFiniteTerm) {
  try {
    total_gen_loss(LossParts{1.0, 1.0, std::nan(""), 0.0});
    FAIL() << "expected an error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("l_adv"), std::string::npos);
  }
  EXPECT_THROW(total_gen_loss(LossParts{1.0, INFINITY, 0.0, 0.0}), std::domain_error);
}

TEST(TotalGenLoss, TensorFormAgrees) {
  auto t = [](double v) { return torch::tensor(v, torch::kFloat64); };
  auto w = weighted_gen_loss(t(0.3), t(1.7), t(0.4), t(0.02));
  EXPECT_NEAR(w.item<double>(), total_gen_loss(LossParts{0.3, 1.7, 0.4, 0.02}).total, 1e-12);
}

}  // namespace
}  // namespace discogan
