/* Copyright 2026 The semls Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Anisotropic atrous (dilated) convolution and the bi-atrous aggregation
// block: a vertical-atrous branch, a horizontal-atrous branch and a plain
// 3x3 branch, each followed by per-channel affine normalization and ReLU,
// summed pixel-wise. Stride is always 1.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "semls/tensor.hpp"

namespace semls {

struct AtrousConfig {
  std::size_t kernel_y = 3;
  std::size_t kernel_x = 3;
  std::size_t rate_y = 1;
  std::size_t rate_x = 1;
  std::size_t pad_y = 1;
  std::size_t pad_x = 1;

  /// (k - 1) * rate + 1 along each axis.
  std::size_t extent_y() const { return (kernel_y - 1) * rate_y + 1; }
  std::size_t extent_x() const { return (kernel_x - 1) * rate_x + 1; }

  /// Padding that preserves the spatial size for this kernel and rate.
  static AtrousConfig same_size(std::size_t ky, std::size_t kx, std::size_t ry, std::size_t rx) {
    return AtrousConfig{ky, kx, ry, rx, (ky - 1) * ry / 2, (kx - 1) * rx / 2};
  }
};

/// Cross-correlation with taps at (dy * rate_y, dx * rate_x), zero padding.
/// Output is C_out x (H + 2 pad_y - (ky-1) rate_y) x (W + 2 pad_x - (kx-1) rate_x).
inline Tensor3 atrous_conv2d(const Tensor3& input, const Tensor4& kernels, const AtrousConfig& cfg) {
  if (kernels.dim1() != input.channels()) {
    throw ShapeError("atrous_conv2d: kernel expects " + std::to_string(kernels.dim1()) +
                     " input channels, got " + std::to_string(input.channels()));
  }
  if (kernels.dim2() != cfg.kernel_y || kernels.dim3() != cfg.kernel_x) {
    throw ShapeError("atrous_conv2d: kernel extent does not match the configuration");
  }
  if (cfg.rate_y < 1 || cfg.rate_x < 1) throw ShapeError("atrous_conv2d: rates must be >= 1");
  const long out_h = static_cast<long>(input.height() + 2 * cfg.pad_y) -
                     static_cast<long>((cfg.kernel_y - 1) * cfg.rate_y);
  const long out_w = static_cast<long>(input.width() + 2 * cfg.pad_x) -
                     static_cast<long>((cfg.kernel_x - 1) * cfg.rate_x);
  if (out_h <= 0 || out_w <= 0) throw ShapeError("atrous_conv2d: non-positive output size");

  const std::size_t oh = static_cast<std::size_t>(out_h), ow = static_cast<std::size_t>(out_w);
  const long in_h = static_cast<long>(input.height()), in_w = static_cast<long>(input.width());
  Tensor3 out(kernels.dim0(), oh, ow);
  for (std::size_t co = 0; co < kernels.dim0(); ++co) {
    for (std::size_t ci = 0; ci < input.channels(); ++ci) {
      for (std::size_t ty = 0; ty < cfg.kernel_y; ++ty) {
        const long off_y = static_cast<long>(ty * cfg.rate_y) - static_cast<long>(cfg.pad_y);
        for (std::size_t tx = 0; tx < cfg.kernel_x; ++tx) {
          const double k = kernels(co, ci, ty, tx);
          if (k == 0.0) continue;
          const long off_x = static_cast<long>(tx * cfg.rate_x) - static_cast<long>(cfg.pad_x);
          const long y_lo = std::max(0L, -off_y), y_hi = std::min(out_h, in_h - off_y);
          const long x_lo = std::max(0L, -off_x), x_hi = std::min(out_w, in_w - off_x);
          for (long y = y_lo; y < y_hi; ++y) {
            const double* src =
                input.data().data() + (ci * input.height() + static_cast<std::size_t>(y + off_y)) * input.width();
            double* dst = &out(co, static_cast<std::size_t>(y), 0);
            for (long x = x_lo; x < x_hi; ++x) dst[x] += k * src[x + off_x];
          }
        }
      }
    }
  }
  return out;
}

enum class BamVariant { kBam51, kBam33 };

/// Vertical, horizontal and square-branch configurations of a variant.
inline std::array<AtrousConfig, 3> bam_configs(BamVariant v) {
  const AtrousConfig square{3, 3, 1, 1, 1, 1};
  if (v == BamVariant::kBam51) {
    return {AtrousConfig{5, 1, 2, 1, 4, 0}, AtrousConfig{1, 5, 1, 2, 0, 4}, square};
  }
  return {AtrousConfig{3, 3, 3, 1, 3, 1}, AtrousConfig{3, 3, 1, 3, 1, 3}, square};
}

/// Per-channel y = scale * x + shift (inference-time batch normalization).
struct ChannelAffine {
  std::vector<double> scale;
  std::vector<double> shift;
};

struct BamBranch {
  Tensor4 kernels;
  ChannelAffine norm;
};

/// Parameters for the vertical, horizontal and square branches, in that order.
using BamParams = std::array<BamBranch, 3>;

inline void normalize_relu_accumulate(const Tensor3& conv, const ChannelAffine& norm,
                                      Tensor3& acc) {
  if (norm.scale.size() != conv.channels() || norm.shift.size() != conv.channels()) {
    throw ShapeError("bam: normalization size does not match branch channels");
  }
  for (std::size_t c = 0; c < conv.channels(); ++c) {
    for (std::size_t y = 0; y < conv.height(); ++y) {
      for (std::size_t x = 0; x < conv.width(); ++x) {
        acc(c, y, x) += std::max(0.0, norm.scale[c] * conv(c, y, x) + norm.shift[c]);
      }
    }
  }
}

/// Output has the input's spatial size and the branches' output channels.
inline Tensor3 bam_forward(const Tensor3& input, const BamParams& params, BamVariant variant) {
  const auto cfgs = bam_configs(variant);
  Tensor3 acc;
  for (std::size_t b = 0; b < 3; ++b) {
    const Tensor3 conv = atrous_conv2d(input, params[b].kernels, cfgs[b]);
    if (conv.height() != input.height() || conv.width() != input.width()) {
      throw ShapeError("bam: branch " + std::to_string(b) + " changed the spatial size to " +
                       conv.shape_string());
    }
    if (b == 0) {
      acc = Tensor3(conv.channels(), conv.height(), conv.width());
    } else if (!conv.same_shape(acc)) {
      throw ShapeError("bam: branch outputs disagree in shape");
    }
    normalize_relu_accumulate(conv, params[b].norm, acc);
  }
  return acc;
}

}  // namespace semls
