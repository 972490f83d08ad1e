#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pulsar/types.hpp"

namespace pulsar::nn {

/// Dense float tensor, channels x dim1 x dim2 x dim3, innermost contiguous.
/// Spatial axes follow the waveform convention (channel rows, azimuth, time).
struct Tensor4 {
  int c = 0, h = 0, w = 0, d = 0;
  std::vector<float> v;

  Tensor4() = default;
  Tensor4(int c_, int h_, int w_, int d_)
      : c(c_), h(h_), w(w_), d(d_),
        v(std::size_t(c_) * h_ * w_ * d_, 0.0f) {
    if (c_ <= 0 || h_ <= 0 || w_ <= 0 || d_ <= 0)
      throw std::invalid_argument("Tensor4: dims must be positive");
  }

  std::size_t size() const { return v.size(); }
  std::size_t spatial() const { return std::size_t(h) * w * d; }
  float& at(int ci, int hi, int wi, int di) {
    return v[((std::size_t(ci) * h + hi) * w + wi) * d + di];
  }
  float at(int ci, int hi, int wi, int di) const {
    return v[((std::size_t(ci) * h + hi) * w + wi) * d + di];
  }
  bool same_shape(const Tensor4& o) const {
    return c == o.c && h == o.h && w == o.w && d == o.d;
  }
};

/// Named weight array. Pointwise / projection matrices are stored
/// [in_channels][out_channels]; depthwise kernels [channels][kx][ky][kz].
struct Layer {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (int s : shape) n *= std::size_t(s);
    return n;
  }
};

struct WeightBundle {
  std::vector<Layer> layers;

  Layer& add(const std::string& name, std::vector<int> shape);
  const Layer& get(const std::string& name) const;  // throws if absent
  const Layer* find(const std::string& name) const;
};

enum class ConvKind { kStandard, kDepthwiseSeparable };

/// Bias-free weight count of a 3-D convolution with kernel (kx, ky, kz):
/// standard kx*ky*kz*cin*cout; depthwise-separable kx*ky*kz*cin + cin*cout.
std::int64_t param_count(ConvKind kind, int kx, int ky, int kz, int cin,
                         int cout);

/// Depthwise-separable 3-D convolution with zero "same" padding. Kernel dims
/// must be odd; depthwise shape [cin, kx, ky, kz], pointwise [cin, cout].
Tensor4 dwsep_conv3d(const Tensor4& x, const Layer& depthwise,
                     const Layer& pointwise);

enum class Axis { kH, kW, kD };

/// Single-head axial self-attention along one spatial axis. Q, K, V are
/// pointwise projections [c, c]; per fiber the output position a is
/// softmax_b(q_a . k_b / sqrt(c))-weighted sum of v_b. With residual the
/// input is added back; residual=false exposes the pre-residual output.
Tensor4 axial_attention(const Tensor4& x, Axis axis, const Layer& wq,
                        const Layer& wk, const Layer& wv, bool residual = true);

Tensor4 avg_pool3(const Tensor4& x, const std::array<int, 3>& factors);
Tensor4 upsample_nearest3(const Tensor4& x, const std::array<int, 3>& factors);
Tensor4 concat_channels(const Tensor4& a, const Tensor4& b);
float silu(float x);

/// Segmentation network hyperparameters. Encoder stage s maps to
/// base_channels * 2^(s-1) channels; spatial dims shrink by `downsample`
/// between stages; the bottleneck applies axial attention along azimuth,
/// channel-row and time axes (in that order); the decoder mirrors the
/// encoder with nearest upsampling and skip concatenation, ending in a
/// pointwise 3-class head.
struct ModelConfig {
  int base_channels = 32;
  std::array<int, 3> kernel = {3, 5, 7};
  int stages = 3;
  std::array<int, 3> downsample = {1, 2, 2};
  bool attend_w = true;
  bool attend_h = true;
  bool attend_d = true;
  std::array<float, 3> class_weights = {0.1f, 0.3f, 0.6f};

  void validate() const;
};

/// Layer names and shapes unet_forward expects for a single-channel input.
std::vector<std::pair<std::string, std::vector<int>>> unet_layer_inventory(
    const ModelConfig& mc);

/// Deterministic uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization of
/// the full inventory, keyed by seed.
WeightBundle random_bundle(const ModelConfig& mc, std::uint64_t seed);

/// Full forward pass over a single-channel window, returning 3-class logits
/// at input resolution. Spatial dims must be divisible by the accumulated
/// downsampling of each axis (the error names the offending axis).
Tensor4 unet_forward(const Tensor4& x, const ModelConfig& mc,
                     const WeightBundle& wb);

/// Per-voxel argmax over class logits; ties resolve to the lowest class.
SegMask logits_to_mask(const Tensor4& logits);

struct WceResult {
  double loss = 0.0;
  Tensor4 grad;  // d(loss)/d(logits), same shape as logits
};

/// Weighted cross-entropy, summed over voxels: for a voxel with label y the
/// contribution is -weights[y] * log softmax(logits)[y], with analytic
/// gradient weights[y] * (softmax - onehot).
WceResult wce_loss(const Tensor4& logits, const SegMask& labels,
                   const std::array<float, 3>& weights);

inline constexpr double kDiceEpsilon = 1e-6;
inline constexpr double kDiceWeight = 0.5;

/// Class-averaged soft Dice loss over softmax probabilities:
/// mean_c [1 - (2 sum(p_c g_c) + eps) / (sum p_c + sum g_c + eps)].
double dice_loss(const Tensor4& logits, const SegMask& labels);

/// Training objective: WCE + kDiceWeight * Dice.
double total_objective(const Tensor4& logits, const SegMask& labels,
                       const std::array<float, 3>& weights);

}  // namespace pulsar::nn
