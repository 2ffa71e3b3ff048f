// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Small convolutional building blocks shared by the networks. Feature maps
// are [B, C, T, F]; kernels are (time, frequency).

#pragma once

#include <torch/torch.h>

#include <cstdint>

namespace discogan {

/// Layer normalization across channels at every (t, f) position. Statistics
/// never mix frames, so time causality of the surrounding network is kept.
class ChannelNormImpl : public torch::nn::Module {
 public:
  explicit ChannelNormImpl(int64_t channels, double eps = 1e-5);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  int64_t channels_;
  double eps_;
  torch::Tensor weight_, bias_;
};
TORCH_MODULE(ChannelNorm);

struct ConvSpec {
  int64_t in = 1, out = 1;
  int64_t kernel_t = 3, kernel_f = 3;
  int64_t stride_f = 1;
  int64_t dilation_t = 1;
};

/// 2D convolution padded only towards the past along time and symmetrically
/// ("same") along frequency. Output frame t depends on input frames <= t.
class CausalConv2dImpl : public torch::nn::Module {
 public:
  explicit CausalConv2dImpl(const ConvSpec& spec);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv{nullptr};

 private:
  int64_t time_pad_;
  int64_t freq_pad_;
};
TORCH_MODULE(CausalConv2d);

/// Transposed convolution with frequency stride; the trailing time frames
/// produced by the kernel overhang are cropped so T is unchanged and frame t
/// only sees input frames <= t. Frequency output is exactly stride_f * F_in.
class CausalConvTranspose2dImpl : public torch::nn::Module {
 public:
  explicit CausalConvTranspose2dImpl(const ConvSpec& spec);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::ConvTranspose2d conv{nullptr};
};
TORCH_MODULE(CausalConvTranspose2d);

/// Weight-normalized 2D convolution (w = g * v / |v| per output channel) with
/// symmetric padding on both axes.
class WNConv2dImpl : public torch::nn::Module {
 public:
  explicit WNConv2dImpl(const ConvSpec& spec);
  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor weight() const;

  torch::Tensor weight_v, weight_g, bias;

 private:
  ConvSpec spec_;
};
TORCH_MODULE(WNConv2d);

}  // namespace discogan
