#include "pulsar/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pulsar/parallel.hpp"
#include "pulsar/rng.hpp"

namespace pulsar::nn {

Layer& WeightBundle::add(const std::string& name, std::vector<int> shape) {
  for (int s : shape)
    if (s <= 0) throw std::invalid_argument("Layer " + name + ": nonpositive dim");
  Layer layer;
  layer.name = name;
  layer.shape = std::move(shape);
  layer.values.assign(layer.element_count(), 0.0f);
  layers.push_back(std::move(layer));
  return layers.back();
}

const Layer* WeightBundle::find(const std::string& name) const {
  for (const Layer& l : layers)
    if (l.name == name) return &l;
  return nullptr;
}

const Layer& WeightBundle::get(const std::string& name) const {
  if (const Layer* l = find(name)) return *l;
  throw std::invalid_argument("WeightBundle: missing layer '" + name + "'");
}

std::int64_t param_count(ConvKind kind, int kx, int ky, int kz, int cin,
                         int cout) {
  if (kx <= 0 || ky <= 0 || kz <= 0 || cin <= 0 || cout <= 0)
    throw std::invalid_argument("param_count: all dims must be positive");
  std::int64_t k = std::int64_t(kx) * ky * kz;
  if (kind == ConvKind::kStandard) return k * cin * cout;
  return k * cin + std::int64_t(cin) * cout;
}

namespace {

void expect_shape(const Layer& l, const std::vector<int>& shape,
                  const char* what) {
  if (l.shape != shape)
    throw std::invalid_argument(std::string(what) + " '" + l.name +
                                "' has unexpected shape");
  if (l.values.size() != l.element_count())
    throw std::invalid_argument(std::string(what) + " '" + l.name +
                                "' value count does not match its shape");
}

}  // namespace

Tensor4 dwsep_conv3d(const Tensor4& x, const Layer& depthwise,
                     const Layer& pointwise) {
  if (depthwise.shape.size() != 4 || depthwise.shape[0] != x.c)
    throw std::invalid_argument("dwsep_conv3d: depthwise shape must be [cin, kx, ky, kz]");
  int kx = depthwise.shape[1], ky = depthwise.shape[2], kz = depthwise.shape[3];
  if (kx % 2 == 0 || ky % 2 == 0 || kz % 2 == 0)
    throw std::invalid_argument("dwsep_conv3d: kernel dims must be odd for same padding");
  expect_shape(depthwise, {x.c, kx, ky, kz}, "depthwise kernel");
  if (pointwise.shape.size() != 2 || pointwise.shape[0] != x.c)
    throw std::invalid_argument("dwsep_conv3d: pointwise shape must be [cin, cout]");
  int cout = pointwise.shape[1];

  int rx = kx / 2, ry = ky / 2, rz = kz / 2;
  Tensor4 mid(x.c, x.h, x.w, x.d);
  parallel_for(std::int64_t(x.c) * x.h, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t f = b; f < e; ++f) {
      int ci = int(f / x.h), hi = int(f % x.h);
      const float* ker = depthwise.values.data() + std::size_t(ci) * kx * ky * kz;
      for (int wi = 0; wi < x.w; ++wi)
        for (int di = 0; di < x.d; ++di) {
          double acc = 0.0;
          for (int ox = 0; ox < kx; ++ox) {
            int sh = hi + ox - rx;
            if (sh < 0 || sh >= x.h) continue;
            for (int oy = 0; oy < ky; ++oy) {
              int sw = wi + oy - ry;
              if (sw < 0 || sw >= x.w) continue;
              for (int oz = 0; oz < kz; ++oz) {
                int sd = di + oz - rz;
                if (sd < 0 || sd >= x.d) continue;
                acc += double(x.at(ci, sh, sw, sd)) *
                       ker[(std::size_t(ox) * ky + oy) * kz + oz];
              }
            }
          }
          mid.at(ci, hi, wi, di) = float(acc);
        }
    }
  });

  Tensor4 out(cout, x.h, x.w, x.d);
  std::size_t spatial = x.spatial();
  parallel_for(std::int64_t(spatial), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t p = b; p < e; ++p) {
      for (int co = 0; co < cout; ++co) {
        double acc = 0.0;
        for (int ci = 0; ci < x.c; ++ci)
          acc += double(mid.v[std::size_t(ci) * spatial + p]) *
                 pointwise.values[std::size_t(ci) * cout + co];
        out.v[std::size_t(co) * spatial + p] = float(acc);
      }
    }
  });
  return out;
}

namespace {

// Applies a [c_in, c_out] projection pointwise over channels.
Tensor4 project_channels(const Tensor4& x, const Layer& w) {
  if (w.shape.size() != 2 || w.shape[0] != x.c)
    throw std::invalid_argument("projection '" + w.name +
                                "' does not match input channels");
  int cout = w.shape[1];
  Tensor4 out(cout, x.h, x.w, x.d);
  std::size_t spatial = x.spatial();
  parallel_for(std::int64_t(spatial), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t p = b; p < e; ++p)
      for (int co = 0; co < cout; ++co) {
        double acc = 0.0;
        for (int ci = 0; ci < x.c; ++ci)
          acc += double(x.v[std::size_t(ci) * spatial + p]) *
                 w.values[std::size_t(ci) * cout + co];
        out.v[std::size_t(co) * spatial + p] = float(acc);
      }
  });
  return out;
}

}  // namespace

Tensor4 axial_attention(const Tensor4& x, Axis axis, const Layer& wq,
                        const Layer& wk, const Layer& wv, bool residual) {
  if (wq.shape != std::vector<int>{x.c, x.c} ||
      wk.shape != std::vector<int>{x.c, x.c} ||
      wv.shape != std::vector<int>{x.c, x.c})
    throw std::invalid_argument("axial_attention: projections must be square [c, c]");

  Tensor4 q = project_channels(x, wq);
  Tensor4 k = project_channels(x, wk);
  Tensor4 v = project_channels(x, wv);

  int len = axis == Axis::kH ? x.h : axis == Axis::kW ? x.w : x.d;
  std::int64_t fibers = std::int64_t(x.h) * x.w * x.d / len;
  double inv_sqrt_c = 1.0 / std::sqrt(double(x.c));

  // Strides to walk one fiber: positions p0 + s * step for s in [0, len).
  std::size_t spatial = x.spatial();
  auto fiber_start = [&](std::int64_t fi, std::size_t& p0, std::size_t& step) {
    if (axis == Axis::kD) {
      p0 = std::size_t(fi) * x.d;
      step = 1;
    } else if (axis == Axis::kW) {
      std::int64_t hi = fi / x.d, di = fi % x.d;
      p0 = (std::size_t(hi) * x.w) * x.d + di;
      step = std::size_t(x.d);
    } else {
      std::int64_t wi = fi / x.d, di = fi % x.d;
      p0 = std::size_t(wi) * x.d + di;
      step = std::size_t(x.w) * x.d;
    }
  };

  Tensor4 out(x.c, x.h, x.w, x.d);
  parallel_for(fibers, [&](std::int64_t b, std::int64_t e) {
    std::vector<double> scores(len), mix(std::size_t(len) * x.c);
    for (std::int64_t fi = b; fi < e; ++fi) {
      std::size_t p0, step;
      fiber_start(fi, p0, step);
      for (int a = 0; a < len; ++a) {
        std::size_t pa = p0 + std::size_t(a) * step;
        double mx = -std::numeric_limits<double>::infinity();
        for (int t = 0; t < len; ++t) {
          std::size_t pt = p0 + std::size_t(t) * step;
          double dot = 0.0;
          for (int ci = 0; ci < x.c; ++ci)
            dot += double(q.v[std::size_t(ci) * spatial + pa]) *
                   k.v[std::size_t(ci) * spatial + pt];
          scores[t] = dot * inv_sqrt_c;
          mx = std::max(mx, scores[t]);
        }
        double z = 0.0;
        for (int t = 0; t < len; ++t) {
          scores[t] = std::exp(scores[t] - mx);
          z += scores[t];
        }
        for (int ci = 0; ci < x.c; ++ci) mix[std::size_t(a) * x.c + ci] = 0.0;
        for (int t = 0; t < len; ++t) {
          std::size_t pt = p0 + std::size_t(t) * step;
          double p = scores[t] / z;
          for (int ci = 0; ci < x.c; ++ci)
            mix[std::size_t(a) * x.c + ci] +=
                p * v.v[std::size_t(ci) * spatial + pt];
        }
      }
      for (int a = 0; a < len; ++a) {
        std::size_t pa = p0 + std::size_t(a) * step;
        for (int ci = 0; ci < x.c; ++ci) {
          double y = mix[std::size_t(a) * x.c + ci];
          if (residual) y += x.v[std::size_t(ci) * spatial + pa];
          out.v[std::size_t(ci) * spatial + pa] = float(y);
        }
      }
    }
  });
  return out;
}

Tensor4 avg_pool3(const Tensor4& x, const std::array<int, 3>& f) {
  for (int i = 0; i < 3; ++i)
    if (f[i] <= 0) throw std::invalid_argument("avg_pool3: factors must be positive");
  if (x.h % f[0] || x.w % f[1] || x.d % f[2])
    throw std::invalid_argument("avg_pool3: dims not divisible by pooling factors");
  Tensor4 out(x.c, x.h / f[0], x.w / f[1], x.d / f[2]);
  double inv = 1.0 / (double(f[0]) * f[1] * f[2]);
  parallel_for(std::int64_t(out.c) * out.h, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t g = b; g < e; ++g) {
      int ci = int(g / out.h), hi = int(g % out.h);
      for (int wi = 0; wi < out.w; ++wi)
        for (int di = 0; di < out.d; ++di) {
          double acc = 0.0;
          for (int a = 0; a < f[0]; ++a)
            for (int bb = 0; bb < f[1]; ++bb)
              for (int cc = 0; cc < f[2]; ++cc)
                acc += x.at(ci, hi * f[0] + a, wi * f[1] + bb, di * f[2] + cc);
          out.at(ci, hi, wi, di) = float(acc * inv);
        }
    }
  });
  return out;
}

Tensor4 upsample_nearest3(const Tensor4& x, const std::array<int, 3>& f) {
  for (int i = 0; i < 3; ++i)
    if (f[i] <= 0) throw std::invalid_argument("upsample_nearest3: factors must be positive");
  Tensor4 out(x.c, x.h * f[0], x.w * f[1], x.d * f[2]);
  parallel_for(std::int64_t(out.c) * out.h, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t g = b; g < e; ++g) {
      int ci = int(g / out.h), hi = int(g % out.h);
      for (int wi = 0; wi < out.w; ++wi)
        for (int di = 0; di < out.d; ++di)
          out.at(ci, hi, wi, di) = x.at(ci, hi / f[0], wi / f[1], di / f[2]);
    }
  });
  return out;
}

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b) {
  if (a.h != b.h || a.w != b.w || a.d != b.d)
    throw std::invalid_argument("concat_channels: spatial dims differ");
  Tensor4 out(a.c + b.c, a.h, a.w, a.d);
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + a.v.size());
  return out;
}

float silu(float x) { return x / (1.0f + std::exp(-x)); }

void ModelConfig::validate() const {
  if (base_channels <= 0)
    throw std::invalid_argument("ModelConfig: base_channels must be positive");
  if (stages < 1) throw std::invalid_argument("ModelConfig: stages must be >= 1");
  for (int k : kernel)
    if (k <= 0 || k % 2 == 0)
      throw std::invalid_argument("ModelConfig: kernel dims must be odd and positive");
  for (int f : downsample)
    if (f <= 0) throw std::invalid_argument("ModelConfig: downsample factors must be positive");
  for (float w : class_weights)
    if (!(w >= 0)) throw std::invalid_argument("ModelConfig: class weights must be >= 0");
}

namespace {

int stage_out_channels(const ModelConfig& mc, int s) {  // s is 1-based
  return mc.base_channels << (s - 1);
}

}  // namespace

std::vector<std::pair<std::string, std::vector<int>>> unet_layer_inventory(
    const ModelConfig& mc) {
  mc.validate();
  std::vector<std::pair<std::string, std::vector<int>>> inv;
  auto dwsep = [&](const std::string& base, int cin, int cout) {
    inv.emplace_back(base + ".dw",
                     std::vector<int>{cin, mc.kernel[0], mc.kernel[1], mc.kernel[2]});
    inv.emplace_back(base + ".pw", std::vector<int>{cin, cout});
  };

  int cin = 1;
  for (int s = 1; s <= mc.stages; ++s) {
    int cout = stage_out_channels(mc, s);
    dwsep("enc" + std::to_string(s), cin, cout);
    cin = cout;
  }
  int cb = stage_out_channels(mc, mc.stages);
  const char* axes[] = {"w", "h", "d"};
  bool enabled[] = {mc.attend_w, mc.attend_h, mc.attend_d};
  for (int a = 0; a < 3; ++a) {
    if (!enabled[a]) continue;
    for (const char* proj : {"q", "k", "v"})
      inv.emplace_back(std::string("attn.") + axes[a] + "." + proj,
                       std::vector<int>{cb, cb});
  }
  int carried = cb;
  for (int s = mc.stages - 1; s >= 1; --s) {
    int skip = stage_out_channels(mc, s);
    dwsep("dec" + std::to_string(s), carried + skip, skip);
    carried = skip;
  }
  inv.emplace_back("head.pw", std::vector<int>{carried, SegMask::kClassCount});
  return inv;
}

WeightBundle random_bundle(const ModelConfig& mc, std::uint64_t seed) {
  WeightBundle wb;
  auto inventory = unet_layer_inventory(mc);
  for (std::size_t li = 0; li < inventory.size(); ++li) {
    Layer& layer = wb.add(inventory[li].first, inventory[li].second);
    std::size_t fan_in = layer.shape.size() == 4
                             ? std::size_t(layer.shape[1]) * layer.shape[2] * layer.shape[3]
                             : std::size_t(layer.shape[0]);
    double scale = 1.0 / std::sqrt(double(fan_in));
    for (std::size_t i = 0; i < layer.values.size(); ++i)
      layer.values[i] = float(rng::uniform(
          rng::key(seed, rng::kStreamWeights, li, i), -scale, scale));
  }
  return wb;
}

Tensor4 unet_forward(const Tensor4& x, const ModelConfig& mc,
                     const WeightBundle& wb) {
  mc.validate();
  if (x.c != 1)
    throw std::invalid_argument("unet_forward: expected a single-channel input window");
  const char* axis_names[] = {"channel rows", "azimuth bins", "time bins"};
  int dims[] = {x.h, x.w, x.d};
  for (int a = 0; a < 3; ++a) {
    int need = 1;
    for (int s = 1; s < mc.stages; ++s) need *= mc.downsample[a];
    if (dims[a] % need != 0)
      throw std::invalid_argument(std::string("unet_forward: ") + axis_names[a] +
                                  " (" + std::to_string(dims[a]) +
                                  ") not divisible by accumulated downsampling " +
                                  std::to_string(need));
  }

  auto act = [](Tensor4 t) {
    for (float& f : t.v) f = silu(f);
    return t;
  };

  std::vector<Tensor4> skips;
  Tensor4 cur = x;
  for (int s = 1; s <= mc.stages; ++s) {
    std::string base = "enc" + std::to_string(s);
    cur = act(dwsep_conv3d(cur, wb.get(base + ".dw"), wb.get(base + ".pw")));
    if (s < mc.stages) {
      skips.push_back(cur);
      cur = avg_pool3(cur, mc.downsample);
    }
  }

  struct AttnPlan { const char* name; Axis axis; bool on; };
  const AttnPlan plan[] = {{"w", Axis::kW, mc.attend_w},
                           {"h", Axis::kH, mc.attend_h},
                           {"d", Axis::kD, mc.attend_d}};
  for (const AttnPlan& p : plan) {
    if (!p.on) continue;
    std::string base = std::string("attn.") + p.name;
    cur = axial_attention(cur, p.axis, wb.get(base + ".q"), wb.get(base + ".k"),
                          wb.get(base + ".v"));
  }

  for (int s = mc.stages - 1; s >= 1; --s) {
    cur = upsample_nearest3(cur, mc.downsample);
    cur = concat_channels(cur, skips[std::size_t(s) - 1]);
    std::string base = "dec" + std::to_string(s);
    cur = act(dwsep_conv3d(cur, wb.get(base + ".dw"), wb.get(base + ".pw")));
  }

  // Pointwise head stays linear so downstream losses see raw logits.
  return project_channels(cur, wb.get("head.pw"));
}

SegMask logits_to_mask(const Tensor4& logits) {
  SegMask mask(logits.h, logits.w, logits.d);
  std::size_t spatial = logits.spatial();
  parallel_for(std::int64_t(spatial), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t p = b; p < e; ++p) {
      int best = 0;
      for (int ci = 1; ci < logits.c; ++ci)
        if (logits.v[std::size_t(ci) * spatial + p] >
            logits.v[std::size_t(best) * spatial + p])
          best = ci;
      mask.data()[std::size_t(p)] = std::uint8_t(best);
    }
  });
  return mask;
}

namespace {

void check_label_shape(const Tensor4& logits, const SegMask& labels,
                       const char* what) {
  if (logits.c != SegMask::kClassCount)
    throw std::invalid_argument(std::string(what) + ": expected 3-class logits");
  if (logits.h != labels.channels() || logits.w != labels.azimuth_bins() ||
      logits.d != labels.time_bins())
    throw std::invalid_argument(std::string(what) + ": logits and labels differ in shape");
}

inline void softmax3(const double* z, double* p) {
  double mx = std::max({z[0], z[1], z[2]});
  double e0 = std::exp(z[0] - mx), e1 = std::exp(z[1] - mx), e2 = std::exp(z[2] - mx);
  double inv = 1.0 / (e0 + e1 + e2);
  p[0] = e0 * inv; p[1] = e1 * inv; p[2] = e2 * inv;
}

}  // namespace

WceResult wce_loss(const Tensor4& logits, const SegMask& labels,
                   const std::array<float, 3>& weights) {
  check_label_shape(logits, labels, "wce_loss");
  WceResult res;
  res.grad = Tensor4(logits.c, logits.h, logits.w, logits.d);
  std::size_t spatial = logits.spatial();

  double loss = 0.0;
  for (std::size_t p = 0; p < spatial; ++p) {
    std::uint8_t y = labels.data()[p];
    if (y >= SegMask::kClassCount)
      throw std::invalid_argument("wce_loss: label out of range");
    double z[3], prob[3];
    for (int c = 0; c < 3; ++c) z[c] = logits.v[std::size_t(c) * spatial + p];
    softmax3(z, prob);
    double w = weights[y];
    loss -= w * std::log(prob[y]);
    for (int c = 0; c < 3; ++c)
      res.grad.v[std::size_t(c) * spatial + p] =
          float(w * (prob[c] - (c == y ? 1.0 : 0.0)));
  }
  res.loss = loss;
  return res;
}

double dice_loss(const Tensor4& logits, const SegMask& labels) {
  check_label_shape(logits, labels, "dice_loss");
  std::size_t spatial = logits.spatial();

  double inter[3] = {0, 0, 0}, psum[3] = {0, 0, 0}, gsum[3] = {0, 0, 0};
  for (std::size_t p = 0; p < spatial; ++p) {
    std::uint8_t y = labels.data()[p];
    if (y >= SegMask::kClassCount)
      throw std::invalid_argument("dice_loss: label out of range");
    double z[3], prob[3];
    for (int c = 0; c < 3; ++c) z[c] = logits.v[std::size_t(c) * spatial + p];
    softmax3(z, prob);
    for (int c = 0; c < 3; ++c) psum[c] += prob[c];
    inter[y] += prob[y];
    gsum[y] += 1.0;
  }
  double loss = 0.0;
  for (int c = 0; c < 3; ++c)
    loss += 1.0 - (2.0 * inter[c] + kDiceEpsilon) /
                      (psum[c] + gsum[c] + kDiceEpsilon);
  return loss / 3.0;
}

double total_objective(const Tensor4& logits, const SegMask& labels,
                       const std::array<float, 3>& weights) {
  return wce_loss(logits, labels, weights).loss +
         kDiceWeight * dice_loss(logits, labels);
}

}  // namespace pulsar::nn
