#include "deepir/backbone.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <string>
#include <vector>

#include "deepir/error.hpp"

namespace deepir {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using StridedRows = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstStridedRows = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

// im2col buffers are capped at this many doubles; rows are processed in chunks.
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;

int rows_per_chunk(int kernel_rows, int width, int height) {
  std::size_t per_row = static_cast<std::size_t>(kernel_rows) * width;
  return std::clamp(static_cast<int>(kColumnBudget / std::max<std::size_t>(per_row, 1)), 1, height);
}

void im2col(const FeatureMap& x, int r0, int r1, RowMatrix& cols) {
  const int h = x.height(), w = x.width();
  const int positions = (r1 - r0) * w;
  cols.resize(static_cast<Eigen::Index>(x.channels()) * 9, positions);
  for (int c = 0; c < x.channels(); ++c) {
    auto plane = x.plane(c);
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* row = cols.row((c * 3 + ky) * 3 + kx).data();
        for (int i = r0; i < r1; ++i) {
          const int si = i + ky - 1;
          double* dst = row + static_cast<std::size_t>(i - r0) * w;
          if (si < 0 || si >= h) {
            std::fill(dst, dst + w, 0.0);
            continue;
          }
          const double* src = plane.data() + static_cast<std::size_t>(si) * w;
          for (int j = 0; j < w; ++j) {
            const int sj = j + kx - 1;
            dst[j] = (sj >= 0 && sj < w) ? src[sj] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const RowMatrix& cols, int r0, int r1, FeatureMap& dx) {
  const int h = dx.height(), w = dx.width();
  for (int c = 0; c < dx.channels(); ++c) {
    auto plane = dx.plane(c);
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* row = cols.row((c * 3 + ky) * 3 + kx).data();
        for (int i = r0; i < r1; ++i) {
          const int si = i + ky - 1;
          if (si < 0 || si >= h) continue;
          const double* src = row + static_cast<std::size_t>(i - r0) * w;
          double* dst = plane.data() + static_cast<std::size_t>(si) * w;
          for (int j = 0; j < w; ++j) {
            const int sj = j + kx - 1;
            if (sj >= 0 && sj < w) dst[sj] += src[j];
          }
        }
      }
    }
  }
}

Eigen::Map<const RowMatrix> kernel_matrix(const ConvLayer& l) {
  return {l.weights.data(), l.out_channels, static_cast<Eigen::Index>(l.in_channels) * 9};
}

/// 3x3 convolution, zero padding 1, stride 1, followed by ReLU.
FeatureMap conv_relu(const FeatureMap& x, const ConvLayer& l) {
  if (x.channels() != l.in_channels)
    throw ShapeError("layer " + l.name + " expects " + std::to_string(l.in_channels) + " channels, got " +
                     std::to_string(x.channels()));
  const int h = x.height(), w = x.width();
  const auto plane = static_cast<Eigen::Index>(x.plane_size());
  FeatureMap y(h, w, l.out_channels);
  auto kernel = kernel_matrix(l);
  RowMatrix cols;
  const int step = rows_per_chunk(l.in_channels * 9, w, h);
  for (int r0 = 0; r0 < h; r0 += step) {
    const int r1 = std::min(h, r0 + step);
    im2col(x, r0, r1, cols);
    StridedRows out(y.data().data() + static_cast<std::size_t>(r0) * w, l.out_channels, (r1 - r0) * w,
                    Eigen::OuterStride<>(plane));
    out.noalias() = kernel * cols;
  }
  for (int o = 0; o < l.out_channels; ++o) {
    const double b = l.bias[o];
    for (double& v : y.plane(o)) v = std::max(v + b, 0.0);
  }
  return y;
}

/// Gradient of conv_relu with respect to its input, given the layer output
/// (for the ReLU mask) and the gradient at the output.
FeatureMap conv_relu_backward(const FeatureMap& x, const FeatureMap& y, FeatureMap grad_y, const ConvLayer& l) {
  const int h = x.height(), w = x.width();
  const auto plane = static_cast<Eigen::Index>(x.plane_size());
  auto gy = grad_y.data();
  auto yv = y.data();
  for (std::size_t k = 0; k < gy.size(); ++k)
    if (!(yv[k] > 0.0)) gy[k] = 0.0;
  FeatureMap dx(h, w, x.channels());
  auto kernel = kernel_matrix(l);
  RowMatrix cols;
  const int step = rows_per_chunk(l.in_channels * 9, w, h);
  for (int r0 = 0; r0 < h; r0 += step) {
    const int r1 = std::min(h, r0 + step);
    ConstStridedRows g(grad_y.data().data() + static_cast<std::size_t>(r0) * w, l.out_channels, (r1 - r0) * w,
                       Eigen::OuterStride<>(plane));
    cols.noalias() = kernel.transpose() * g;
    col2im_add(cols, r0, r1, dx);
  }
  return dx;
}

/// 2x2 max-pool, stride 2, ceil mode. `argmax` receives the flat source index
/// (within the plane) of each output element; ties resolve to the first in
/// scan order.
FeatureMap max_pool(const FeatureMap& x, std::vector<std::size_t>* argmax) {
  const int h = x.height(), w = x.width();
  const int oh = (h + 1) / 2, ow = (w + 1) / 2;
  FeatureMap y(oh, ow, x.channels());
  if (argmax) argmax->resize(y.size());
  for (int c = 0; c < x.channels(); ++c) {
    auto src = x.plane(c);
    auto dst = y.plane(c);
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        std::size_t best = static_cast<std::size_t>(2 * i) * w + 2 * j;
        for (int di = 0; di < 2; ++di) {
          for (int dj = 0; dj < 2; ++dj) {
            const int si = 2 * i + di, sj = 2 * j + dj;
            if (si >= h || sj >= w) continue;
            const std::size_t idx = static_cast<std::size_t>(si) * w + sj;
            if (src[idx] > src[best]) best = idx;
          }
        }
        const std::size_t out_idx = static_cast<std::size_t>(i) * ow + j;
        dst[out_idx] = src[best];
        if (argmax) (*argmax)[c * y.plane_size() + out_idx] = best;
      }
    }
  }
  return y;
}

FeatureMap max_pool_backward(const FeatureMap& grad_y, const std::vector<std::size_t>& argmax, int h, int w) {
  FeatureMap dx(h, w, grad_y.channels());
  for (int c = 0; c < grad_y.channels(); ++c) {
    auto g = grad_y.plane(c);
    auto d = dx.plane(c);
    for (std::size_t k = 0; k < g.size(); ++k) d[argmax[c * grad_y.plane_size() + k]] += g[k];
  }
  return dx;
}

struct Stage {
  enum Kind { Conv, Pool } kind;
  std::string_view layer;
};

const std::vector<Stage>& transition(int target_level) {
  static const std::vector<Stage> kToLevel2{{Stage::Conv, "conv1_2"}, {Stage::Pool, {}}, {Stage::Conv, "conv2_1"}};
  static const std::vector<Stage> kToLevel3{{Stage::Conv, "conv2_2"}, {Stage::Pool, {}}, {Stage::Conv, "conv3_1"}};
  static const std::vector<Stage> kToLevel4{{Stage::Conv, "conv3_2"},
                                            {Stage::Conv, "conv3_3"},
                                            {Stage::Conv, "conv3_4"},
                                            {Stage::Pool, {}},
                                            {Stage::Conv, "conv4_1"}};
  switch (target_level) {
    case 2:
      return kToLevel2;
    case 3:
      return kToLevel3;
    case 4:
      return kToLevel4;
    default:
      throw ArgumentError("no sub-network ends at level " + std::to_string(target_level));
  }
}

int input_level(const FeatureMap& x, const WeightsBundle& w) {
  for (int l = 1; l < kPyramidDepth; ++l)
    if (x.channels() == level_channels(w, l)) return l;
  throw ShapeError("wrong channel count " + std::to_string(x.channels()) + " for an inter-level sub-network input");
}

struct Tape {
  std::vector<FeatureMap> inputs;  // input of each stage
  std::vector<std::vector<std::size_t>> argmax;
};

FeatureMap run_transition(const FeatureMap& x, const WeightsBundle& w, int target_level, Tape* tape) {
  const auto& stages = transition(target_level);
  FeatureMap cur = x;
  if (tape) {
    tape->inputs.clear();
    tape->argmax.assign(stages.size(), {});
  }
  for (std::size_t s = 0; s < stages.size(); ++s) {
    FeatureMap next = stages[s].kind == Stage::Conv ? conv_relu(cur, w.layer(stages[s].layer))
                                                    : max_pool(cur, tape ? &tape->argmax[s] : nullptr);
    if (tape) tape->inputs.push_back(std::move(cur));
    cur = std::move(next);
  }
  cur.set_layer(target_level);
  return cur;
}

}  // namespace

int level_channels(const WeightsBundle& w, int level) {
  if (level < 1 || level > kPyramidDepth) throw ArgumentError("pyramid level out of range");
  return kPyramidLevels[level - 1].channels / w.width_divisor();
}

int level_extent(int input_extent, int level) {
  int e = input_extent;
  for (int l = 1; l < level; ++l) e = (e + 1) / 2;
  return e;
}

FeatureMap preprocess(const Image& img, const WeightsBundle& w) {
  FeatureMap x(img.height(), img.width(), Image::kChannels);
  for (int c = 0; c < Image::kChannels; ++c) {
    const double mean = w.preprocess.mean_rgb[c];
    for (int i = 0; i < img.height(); ++i)
      for (int j = 0; j < img.width(); ++j) x.at(i, j, c) = (img.at(i, j, c) - mean) * w.preprocess.scale;
  }
  return x;
}

FeaturePyramid extract_pyramid(const Image& img, const WeightsBundle& w) {
  if (img.height() < kMinImageExtent || img.width() < kMinImageExtent)
    throw ShapeError("image too small: need at least " + std::to_string(kMinImageExtent) + "x" +
                     std::to_string(kMinImageExtent));
  FeaturePyramid pyramid;
  pyramid.level(1) = conv_relu(preprocess(img, w), w.layer("conv1_1"));
  pyramid.level(1).set_layer(1);
  for (int l = 2; l <= kPyramidDepth; ++l) pyramid.level(l) = run_transition(pyramid.level(l - 1), w, l, nullptr);
  return pyramid;
}

FeatureMap forward_between(const FeatureMap& x, const WeightsBundle& w) {
  return run_transition(x, w, input_level(x, w) + 1, nullptr);
}

double feature_loss(const FeatureMap& x, const FeatureMap& target, const WeightsBundle& w) {
  FeatureMap out = forward_between(x, w);
  if (!out.same_shape(target)) throw ShapeError("inversion target shape does not match forward image");
  double loss = 0.0;
  auto o = out.data();
  auto t = target.data();
  for (std::size_t k = 0; k < o.size(); ++k) {
    const double r = o[k] - t[k];
    loss += r * r;
  }
  return loss;
}

LossAndGradient loss_and_gradient(const FeatureMap& x, const FeatureMap& target, const WeightsBundle& w) {
  const int level = input_level(x, w) + 1;
  Tape tape;
  FeatureMap out = run_transition(x, w, level, &tape);
  if (!out.same_shape(target)) throw ShapeError("inversion target shape does not match forward image");

  LossAndGradient result;
  FeatureMap grad(out.height(), out.width(), out.channels());
  auto o = out.data();
  auto t = target.data();
  auto g = grad.data();
  for (std::size_t k = 0; k < o.size(); ++k) {
    const double r = o[k] - t[k];
    result.loss += r * r;
    g[k] = 2.0 * r;
  }

  const auto& stages = transition(level);
  FeatureMap stage_out = std::move(out);
  for (std::size_t s = stages.size(); s-- > 0;) {
    const FeatureMap& in = tape.inputs[s];
    if (stages[s].kind == Stage::Conv) {
      grad = conv_relu_backward(in, stage_out, std::move(grad), w.layer(stages[s].layer));
    } else {
      grad = max_pool_backward(grad, tape.argmax[s], in.height(), in.width());
    }
    stage_out = std::move(tape.inputs[s]);
  }
  grad.set_layer(level - 1);
  result.gradient = std::move(grad);
  return result;
}

}  // namespace deepir
