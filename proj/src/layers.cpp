// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "discogan/layers.hpp"

namespace discogan {
namespace F = torch::nn::functional;

ChannelNormImpl::ChannelNormImpl(int64_t channels, double eps) : channels_(channels), eps_(eps) {
  weight_ = register_parameter("weight", torch::ones({channels}));
  bias_ = register_parameter("bias", torch::zeros({channels}));
}

torch::Tensor ChannelNormImpl::forward(const torch::Tensor& x) {
  auto y = torch::layer_norm(x.movedim(1, -1), {channels_}, weight_, bias_, eps_);
  return y.movedim(-1, 1);
}

CausalConv2dImpl::CausalConv2dImpl(const ConvSpec& spec)
    : time_pad_((spec.kernel_t - 1) * spec.dilation_t), freq_pad_((spec.kernel_f - 1) / 2) {
  conv = register_module(
      "conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(spec.in, spec.out, {spec.kernel_t, spec.kernel_f})
                                    .stride({1, spec.stride_f})
                                    .dilation({spec.dilation_t, 1})));
}

torch::Tensor CausalConv2dImpl::forward(const torch::Tensor& x) {
  return conv(F::pad(x, F::PadFuncOptions({freq_pad_, freq_pad_, time_pad_, 0})));
}

CausalConvTranspose2dImpl::CausalConvTranspose2dImpl(const ConvSpec& spec) {
  // Frequency padding (k - s) / 2 makes the output exactly s * F_in.
  const int64_t freq_pad = (spec.kernel_f - spec.stride_f) / 2;
  conv = register_module("conv", torch::nn::ConvTranspose2d(
                                     torch::nn::ConvTranspose2dOptions(spec.in, spec.out, {spec.kernel_t, spec.kernel_f})
                                         .stride({1, spec.stride_f})
                                         .padding({0, freq_pad})));
}

torch::Tensor CausalConvTranspose2dImpl::forward(const torch::Tensor& x) {
  return conv(x).narrow(2, 0, x.size(2));
}

WNConv2dImpl::WNConv2dImpl(const ConvSpec& spec) : spec_(spec) {
  torch::nn::Conv2d proto(torch::nn::Conv2dOptions(spec.in, spec.out, {spec.kernel_t, spec.kernel_f}));
  auto v = proto->weight.detach().clone();
  auto g = v.flatten(1).norm(2, 1).reshape({spec.out, 1, 1, 1});
  weight_v = register_parameter("weight_v", v);
  weight_g = register_parameter("weight_g", g);
  bias = register_parameter("bias", proto->bias.detach().clone());
}

torch::Tensor WNConv2dImpl::weight() const {
  auto norm = weight_v.flatten(1).norm(2, 1).reshape({spec_.out, 1, 1, 1});
  return weight_g * weight_v / norm;
}

torch::Tensor WNConv2dImpl::forward(const torch::Tensor& x) {
  const int64_t pad_t = (spec_.kernel_t - 1) * spec_.dilation_t / 2;
  const int64_t pad_f = (spec_.kernel_f - 1) / 2;
  return F::conv2d(x, weight(), F::Conv2dFuncOptions()
                                    .bias(bias)
                                    .stride({1, spec_.stride_f})
                                    .padding({pad_t, pad_f})
                                    .dilation({spec_.dilation_t, 1}));
}

}  // namespace discogan
