// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "discogan/audio.hpp"
#include "discogan/dsp.hpp"
#include "support/synth.hpp"

namespace discogan {
namespace {

using testing::random_clip;
using testing::TempDir;

constexpr double kE = std::numbers::e;

double rel_l2(const torch::Tensor& a, const torch::Tensor& b) {
  return (a - b).norm().item<double>() / b.norm().item<double>();
}

torch::Tensor bins_to_spec(std::complex<double> value) {
  auto spec = torch::zeros({1, 257}, torch::kComplexDouble);
  spec.index_put_({0, 3}, c10::complex<double>(value.real(), value.imag()));
  return spec;
}

TEST(WavIo, Float32RoundTripIsExactForFloatValues) {
  TempDir dir("wav");
  AudioClip clip;
  clip.samples = {0.0, 0.5, -0.25, 0.125, -1.0, 0.75};
  write_wav(dir / "a.wav", clip);
  auto back = read_wav(dir / "a.wav");
  EXPECT_EQ(back.sample_rate, kSampleRate);
  EXPECT_EQ(back.samples, clip.samples);
}

TEST(WavIo, Pcm16RoundTripWithinOneStep) {
  TempDir dir("wav");
  auto clip = random_clip(1000, 3, 0.2);
  write_wav(dir / "a.wav", clip, WavFormat::kPcm16);
  auto back = read_wav(dir / "a.wav");
  ASSERT_EQ(back.size(), clip.size());
  for (std::size_t i = 0; i < clip.size(); ++i) EXPECT_NEAR(back.samples[i], clip.samples[i], 1.0 / 32768.0);
}

TEST(WavIo, ClippingOnPcmWriteIsAnError) {
  TempDir dir("wav");
  AudioClip clip;
  clip.samples = {0.1, 1.5};
  EXPECT_THROW(write_wav(dir / "a.wav", clip, WavFormat::kPcm16), std::runtime_error);
}

TEST(WavIo, NonFiniteSamplesAreRejected) {
  TempDir dir("wav");
  AudioClip clip;
  clip.samples = {0.1, std::nan("")};
  EXPECT_THROW(write_wav(dir / "a.wav", clip), std::runtime_error);
}

TEST(WavIo, MissingFileThrows) { EXPECT_THROW(read_wav("/nonexistent/x.wav"), std::runtime_error); }

TEST(Stft, ThreeSecondClipHas301FramesAnd257Bins) {
  auto spec = stft(torch::randn({48000}), StftConfig{});
  EXPECT_EQ(spec.size(0), 301);
  EXPECT_EQ(spec.size(1), 257);
  EXPECT_EQ(num_frames(48000, 160), 301);
}

TEST(Stft, ZeroClipGivesZeroSpectrogram) {
  auto spec = stft(torch::zeros({4000}), StftConfig{});
  EXPECT_EQ(torch::abs(spec).max().item<double>(), 0.0);
}

TEST(Stft, BinCentredCosineConcentratesEnergy) {
  const int64_t bin = 40;
  auto n = torch::arange(16000, torch::kFloat64);
  auto x = torch::cos(2.0 * std::numbers::pi * bin * n / 512.0);
  auto power = torch::abs(stft(x, StftConfig{})).square();
  // Interior frames only; the Hann main lobe spans bin-1..bin+1.
  auto interior = power.slice(0, 5, -5);
  auto lobe = interior.slice(1, bin - 1, bin + 2).sum(1);
  auto ratio = lobe / interior.sum(1);
  EXPECT_GT(ratio.min().item<double>(), 0.99);
  EXPECT_EQ(interior.argmax(1).eq(bin).all().item<bool>(), true);
}

TEST(Stft, MatchesBruteForceDftOfAnInteriorFrame) {
  auto x = torch::randn({3000}, torch::kFloat64);
  const StftConfig cfg{64, 16};
  auto spec = stft(x, cfg);
  const int64_t frame = 20;  // starts at sample frame*hop - window/2
  const int64_t start = frame * cfg.hop - cfg.window_size / 2;
  auto acc = x.accessor<double, 1>();
  for (int64_t k = 0; k < cfg.bins(); ++k) {
    std::complex<double> sum = 0.0;
    for (int64_t m = 0; m < cfg.window_size; ++m) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * m / cfg.window_size);
      sum += w * acc[start + m] * std::polar(1.0, -2.0 * std::numbers::pi * k * m / cfg.window_size);
    }
    auto got = spec.index({frame, k}).item<c10::complex<double>>();
    EXPECT_NEAR(got.real(), sum.real(), 1e-9);
    EXPECT_NEAR(got.imag(), sum.imag(), 1e-9);
  }
}

TEST(Stft, FrameCountDependsOnlyOnLengthAndHop) {
  for (int64_t len : {1, 100, 159, 160, 161, 8000}) {
    EXPECT_EQ(stft(torch::randn({len}), StftConfig{}).size(0), num_frames(len, 160));
    EXPECT_EQ(stft(torch::zeros({len}), StftConfig{}).size(0), num_frames(len, 160));
  }
}

TEST(Stft, RejectsEmptyClipAndHopLongerThanWindow) {
  EXPECT_THROW(stft(torch::zeros({0}), StftConfig{}), std::invalid_argument);
  EXPECT_THROW(stft(torch::zeros({1000}), StftConfig{64, 128}), std::invalid_argument);
}

TEST(Stft, BatchedInputKeepsLeadingDims) {
  auto spec = stft(torch::randn({2, 3, 1600}), StftConfig{});
  EXPECT_EQ(spec.sizes(), (std::vector<int64_t>{2, 3, 11, 257}));
}

TEST(Istft, RoundTripOnRandomSignals) {
  for (int seed = 0; seed < 5; ++seed) {
    torch::manual_seed(seed);
    auto x = torch::randn({16000 + 37 * seed}, torch::kFloat64);
    auto y = istft(stft(x, StftConfig{}), StftConfig{}, x.size(0));
    EXPECT_LT(rel_l2(y, x), 1e-6);
  }
}

TEST(Istft, ZeroSpectrogramGivesZeroClip) {
  auto spec = torch::zeros({11, 257}, torch::kComplexFloat);
  EXPECT_EQ(istft(spec, StftConfig{}, 1600).abs().max().item<double>(), 0.0);
}

TEST(Istft, ImpulseIsRecovered) {
  auto x = torch::zeros({4000}, torch::kFloat64);
  x[1234] = 1.0;
  auto y = istft(stft(x, StftConfig{}), StftConfig{}, 4000);
  EXPECT_LT((y - x).abs().max().item<double>(), 1e-6);
}

TEST(Istft, OutputIsPaddedOrTruncatedToLength) {
  auto spec = stft(torch::randn({1600}), StftConfig{});
  EXPECT_EQ(istft(spec, StftConfig{}, 1000).size(0), 1000);
  EXPECT_EQ(istft(spec, StftConfig{}, 2000).size(0), 2000);
}

TEST(CompressTf, ExamplesFromTheDefinition) {
  auto zero = compress_tf(bins_to_spec({0.0, 0.0}));
  EXPECT_EQ(zero.index({0, 0, 3}).item<double>(), 0.0);
  EXPECT_EQ(zero.index({1, 0, 3}).item<double>(), 0.0);

  auto real = compress_tf(bins_to_spec({kE - 1.0, 0.0}));
  EXPECT_NEAR(real.index({0, 0, 3}).item<double>(), 1.0, 1e-12);
  EXPECT_NEAR(real.index({1, 0, 3}).item<double>(), 0.0, 1e-12);

  auto imag = compress_tf(bins_to_spec({0.0, kE - 1.0}));
  EXPECT_NEAR(imag.index({0, 0, 3}).item<double>(), 1.0, 1e-12);
  EXPECT_NEAR(imag.index({1, 0, 3}).item<double>(), 0.5, 1e-12);
}

TEST(CompressTf, DropsNyquistAndBoundsPhase) {
  auto img = compress_tf(stft(torch::randn({2, 3200}), StftConfig{}));
  EXPECT_EQ(img.sizes(), (std::vector<int64_t>{2, 2, 21, 256}));
  EXPECT_LE(img.select(1, 1).abs().max().item<double>(), 1.0);
  EXPECT_GE(img.select(1, 0).min().item<double>(), 0.0);
}

TEST(DecompressTf, ExamplesFromTheDefinition) {
  auto image = [](double m, double c, double s) {
    auto img = torch::zeros({3, 1, 256}, torch::kFloat64);
    img.index_put_({0, 0, 3}, m);
    img.index_put_({1, 0, 3}, c);
    img.index_put_({2, 0, 3}, s);
    return decompress_tf(img).index({0, 3}).item<c10::complex<double>>();
  };
  auto a = image(0.0, 1.0, 0.0);
  EXPECT_EQ(a.real(), 0.0);
  EXPECT_EQ(a.imag(), 0.0);
  auto b = image(1.0, 1.0, 0.0);
  EXPECT_NEAR(b.real(), kE - 1.0, 1e-12);
  EXPECT_NEAR(b.imag(), 0.0, 1e-12);
  auto c = image(1.0, 0.0, 1.0);
  EXPECT_NEAR(c.real(), 0.0, 1e-12);
  EXPECT_NEAR(c.imag(), kE - 1.0, 1e-12);
}

TEST(DecompressTf, NegativeMagnitudeClampsToZeroAndNyquistIsZero) {
  auto img = torch::randn({3, 4, 256}, torch::kFloat64);
  img.select(0, 0).fill_(-3.0);
  auto spec = decompress_tf(img);
  EXPECT_EQ(spec.sizes(), (std::vector<int64_t>{4, 257}));
  EXPECT_EQ(torch::abs(spec).max().item<double>(), 0.0);

  auto spec2 = decompress_tf(torch::randn({3, 4, 256}, torch::kFloat64));
  EXPECT_EQ(torch::abs(spec2.select(-1, 256)).max().item<double>(), 0.0);
}

TEST(DecompressTf, PhaseChannelsAreScaleInvariant) {
  auto img = torch::randn({3, 5, 256}, torch::kFloat64);
  auto scaled = img.clone();
  scaled.slice(0, 1, 3).mul_(2.0);
  auto a = decompress_tf(img);
  auto b = decompress_tf(scaled);
  EXPECT_LT(torch::abs(a - b).max().item<double>(), 1e-12);
}

TEST(DecompressTf, CompressOfDecompressKeepsMagnitudeChannel) {
  auto img = torch::zeros({3, 6, 256}, torch::kFloat64);
  img.select(0, 0).copy_(torch::rand({6, 256}, torch::kFloat64) * std::log1p(1000.0));
  img.select(0, 1).copy_(torch::randn({6, 256}, torch::kFloat64));
  img.select(0, 2).copy_(torch::randn({6, 256}, torch::kFloat64));
  auto back = compress_tf(decompress_tf(img));
  EXPECT_LT((back.select(0, 0) - img.select(0, 0)).abs().max().item<double>(), 1e-6);
}

TEST(DecompressTf, NonFiniteInputThrows) {
  auto img = torch::zeros({3, 2, 256});
  img.index_put_({0, 1, 7}, std::numeric_limits<float>::infinity());
  EXPECT_THROW(decompress_tf(img), std::invalid_argument);
}

TEST(LogPower, ZeroClipIsLogEps) {
  auto lp = log_power_spectrogram(torch::zeros({2000}, torch::kFloat64), 64);
  EXPECT_NEAR(lp.max().item<double>(), std::log(1e-5), 1e-12);
  EXPECT_NEAR(lp.min().item<double>(), -11.512925464970229, 1e-9);
}

TEST(LogPower, SmallestResolutionUsesWindow32Hop8) {
  auto lp = log_power_spectrogram(torch::randn({800}), 32);
  EXPECT_EQ(lp.size(0), num_frames(800, 8));
  EXPECT_EQ(lp.size(1), 17);
}

TEST(LogPower, ScalingByTwoAddsAtMostLog4) {
  torch::manual_seed(24);
  auto x = torch::randn({4000}, torch::kFloat64);
  auto a = log_power_spectrogram(x, 256);
  auto b = log_power_spectrogram(2.0 * x, 256);
  auto diff = b - a;
  EXPECT_LE(diff.max().item<double>(), std::log(4.0) + 1e-12);
  EXPECT_GE(diff.min().item<double>(), 0.0);
  auto strong = a > std::log(1e2);
  ASSERT_GT(strong.sum().item<int64_t>(), 0);
  EXPECT_LT((diff.masked_select(strong) - std::log(4.0)).abs().max().item<double>(), 1e-6);
}

TEST(LogPower, RejectsTinyWindows) { EXPECT_THROW(log_power_spectrogram(torch::zeros({100}), 2), std::invalid_argument); }

TEST(Mel, ZeroClipIsLogEps) {
  auto mel = mel_spectrogram(torch::zeros({2000}, torch::kFloat64), 256, 64);
  EXPECT_NEAR(mel.max().item<double>(), std::log(1e-5), 1e-12);
}

TEST(Mel, FilterbankHasNoEmptyRows) {
  for (int64_t win : {128, 256, 512, 1024}) {
    auto fb = mel_filterbank(64, win);
    ASSERT_EQ(fb.size(), 64u);
    for (const auto& row : fb) {
      double sum = 0.0;
      for (double v : row) {
        EXPECT_GE(v, 0.0);
        sum += v;
      }
      EXPECT_GT(sum, 0.0) << "window " << win;
    }
  }
  for (const auto& row : mel_filterbank(16, 32)) {
    double sum = 0.0;
    for (double v : row) sum += v;
    EXPECT_GT(sum, 0.0);
  }
}

TEST(Mel, WhiteNoiseShapeAndFiniteEnergies) {
  auto mel = mel_spectrogram(torch::randn({8000}, torch::kFloat64), 512, 64);
  EXPECT_EQ(mel.size(0), num_frames(8000, 128));
  EXPECT_EQ(mel.size(1), 64);
  EXPECT_TRUE(torch::isfinite(mel).all().item<bool>());
  EXPECT_GT(mel.min().item<double>(), std::log(1e-5));
}

TEST(Mel, TooManyMelsForWindowThrows) {
  EXPECT_THROW(mel_filterbank(64, 64), std::invalid_argument);
  EXPECT_THROW(mel_spectrogram(torch::zeros({1000}), 32, 17), std::invalid_argument);
}

TEST(Mel, HtkScaleInverts) {
  for (double hz : {0.0, 100.0, 1000.0, 8000.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(hz)), hz, 1e-9);
  EXPECT_NEAR(hz_to_mel(700.0), 2595.0 * std::log10(2.0), 1e-12);
}

TEST(Tensors, ClipConversionCopies) {
  AudioClip clip;
  clip.samples = {0.1, 0.2, 0.3};
  auto t = to_tensor(clip, torch::kFloat64);
  t[0] = 9.0;
  EXPECT_EQ(clip.samples[0], 0.1);
  auto back = to_clip(to_tensor(clip, torch::kFloat64));
  EXPECT_EQ(back.samples, clip.samples);
}

TEST(Hann, IsPeriodic) {
  auto w = periodic_hann(8, torch::kFloat64);
  EXPECT_NEAR(w[0].item<double>(), 0.0, 1e-15);
  EXPECT_NEAR(w[4].item<double>(), 1.0, 1e-15);
  EXPECT_NEAR(w[2].item<double>(), 0.5, 1e-15);
}

}  // namespace
}  // namespace discogan
