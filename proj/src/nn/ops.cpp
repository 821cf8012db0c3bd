// SPDX-License-Identifier: Apache-2.0
#include "isac_atr/nn/ops.hpp"

#include <Eigen/Core>
#include <random>

#include "isac_atr/errors.hpp"

namespace isac_atr::nn {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

struct ConvGeometry {
  std::size_t channels, height, width, kernel, stride, pad, out_h, out_w;
  std::size_t patch() const { return channels * kernel * kernel; }
  std::size_t positions() const { return out_h * out_w; }
};

ConvGeometry conv_geometry(const Shape& in, const Shape& weight, std::size_t stride) {
  if (weight.h != weight.w) {
    throw DimensionError("conv2d: kernel must be square, got " + weight.str());
  }
  if (in.c != weight.c) {
    throw DimensionError("conv2d: input has " + std::to_string(in.c) + " channels, kernel expects " +
                         std::to_string(weight.c));
  }
  if (stride == 0) {
    throw DimensionError("conv2d: stride must be positive");
  }
  ConvGeometry g{in.c, in.h, in.w, weight.h, stride, weight.h / 2, 0, 0};
  g.out_h = window_output(in.h, g.kernel, stride, g.pad);
  g.out_w = window_output(in.w, g.kernel, stride, g.pad);
  if (g.out_h == 0 || g.out_w == 0) {
    throw DimensionError("conv2d: input " + in.str() + " smaller than kernel " +
                         std::to_string(g.kernel));
  }
  return g;
}

// (c*k*k) x (out_h*out_w) patch matrix, row-major.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* col) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.channels; ++c) {
    const T* plane = image + c * g.height * g.width;
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        T* row = col + ((c * g.kernel + ky) * g.kernel + kx) * positions;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          T* out = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) {
            std::fill(out, out + g.out_w, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            out[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width)) ? T{0} : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* image) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.channels; ++c) {
    T* plane = image + c * g.height * g.width;
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        const T* row = col + ((c * g.kernel + ky) * g.kernel + kx) * positions;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) {
            continue;
          }
          T* dst = plane + static_cast<std::size_t>(iy) * g.width;
          const T* in = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.width)) {
              dst[ix] += in[ox];
            }
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t window_output(std::size_t length, std::size_t kernel, std::size_t stride, std::size_t pad) {
  const std::size_t padded = length + 2 * pad;
  if (length == 0 || stride == 0 || padded < kernel) {
    return 0;
  }
  return (padded - kernel) / stride + 1;
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                         std::size_t stride) {
  const ConvGeometry g = conv_geometry(x.shape(), weight.shape(), stride);
  const std::size_t out_c = weight.shape().n;
  if (bias.size() != out_c) {
    throw DimensionError("conv2d: bias length does not match output channels");
  }
  Tensor<T> y(Shape{x.shape().n, out_c, g.out_h, g.out_w});
  AlignedVector<T> col(g.patch() * g.positions());
  const ConstMatrixMap<T> w(weight.data(), static_cast<Eigen::Index>(out_c),
                            static_cast<Eigen::Index>(g.patch()));
  const Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(bias.data(), static_cast<Eigen::Index>(out_c));
  for (std::size_t n = 0; n < x.shape().n; ++n) {
    im2col(x.sample(n), g, col.data());
    const ConstMatrixMap<T> patches(col.data(), static_cast<Eigen::Index>(g.patch()),
                                    static_cast<Eigen::Index>(g.positions()));
    MatrixMap<T> out(y.sample(n), static_cast<Eigen::Index>(out_c), static_cast<Eigen::Index>(g.positions()));
    out.noalias() = w * patches;
    out.colwise() += b;
  }
  return y;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                               const Tensor<T>& weight, std::size_t stride) {
  const ConvGeometry g = conv_geometry(x.shape(), weight.shape(), stride);
  const std::size_t out_c = weight.shape().n;
  const Shape expected{x.shape().n, out_c, g.out_h, g.out_w};
  if (grad_out.shape() != expected) {
    throw DimensionError("conv2d backward: gradient shape " + grad_out.shape().str() +
                         " does not match output " + expected.str());
  }
  Conv2dGrads<T> grads{Tensor<T>(x.shape()), Tensor<T>(weight.shape()), Tensor<T>(Shape{1, out_c})};
  AlignedVector<T> col(g.patch() * g.positions());
  AlignedVector<T> dcol(g.patch() * g.positions());
  const auto rows = static_cast<Eigen::Index>(out_c);
  const auto patch = static_cast<Eigen::Index>(g.patch());
  const auto positions = static_cast<Eigen::Index>(g.positions());
  const ConstMatrixMap<T> w(weight.data(), rows, patch);
  MatrixMap<T> dw(grads.weight.data(), rows, patch);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(grads.bias.data(), rows);
  for (std::size_t n = 0; n < x.shape().n; ++n) {
    im2col(x.sample(n), g, col.data());
    const ConstMatrixMap<T> patches(col.data(), patch, positions);
    const ConstMatrixMap<T> dout(grad_out.sample(n), rows, positions);
    dw.noalias() += dout * patches.transpose();
    db += dout.rowwise().sum();
    MatrixMap<T> dpatches(dcol.data(), patch, positions);
    dpatches.noalias() = w.transpose() * dout;
    col2im_add(dcol.data(), g, grads.input.sample(n));
  }
  return grads;
}

template <typename T>
Tensor<T> fc_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  const std::size_t in = x.shape().sample_size();
  const std::size_t out = weight.shape().n;
  if (weight.shape().c != in || weight.shape().h != 1 || weight.shape().w != 1) {
    throw DimensionError("fc: input has " + std::to_string(in) + " features, weight is " +
                         weight.shape().str());
  }
  if (bias.size() != out) {
    throw DimensionError("fc: bias length does not match output features");
  }
  const auto batch = static_cast<Eigen::Index>(x.shape().n);
  Tensor<T> y(Shape{x.shape().n, out});
  const ConstMatrixMap<T> xm(x.data(), batch, static_cast<Eigen::Index>(in));
  const ConstMatrixMap<T> wm(weight.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  const Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.data(), static_cast<Eigen::Index>(out));
  MatrixMap<T> ym(y.data(), batch, static_cast<Eigen::Index>(out));
  ym.noalias() = xm * wm.transpose();
  ym.rowwise() += b;
  return y;
}

template <typename T>
FcGrads<T> fc_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& weight) {
  const std::size_t in = x.shape().sample_size();
  const std::size_t out = weight.shape().n;
  if (grad_out.shape() != Shape{x.shape().n, out}) {
    throw DimensionError("fc backward: gradient shape " + grad_out.shape().str() + " mismatch");
  }
  const auto batch = static_cast<Eigen::Index>(x.shape().n);
  FcGrads<T> grads{Tensor<T>(x.shape()), Tensor<T>(weight.shape()), Tensor<T>(Shape{1, out})};
  const ConstMatrixMap<T> xm(x.data(), batch, static_cast<Eigen::Index>(in));
  const ConstMatrixMap<T> wm(weight.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  const ConstMatrixMap<T> dy(grad_out.data(), batch, static_cast<Eigen::Index>(out));
  MatrixMap<T>(grads.input.data(), batch, static_cast<Eigen::Index>(in)).noalias() = dy * wm;
  MatrixMap<T>(grads.weight.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)).noalias() =
      dy.transpose() * xm;
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(grads.bias.data(), static_cast<Eigen::Index>(out)) =
      dy.colwise().sum();
  return grads;
}

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, BatchNormState<T>& state, Mode mode,
                            BatchNormCache<T>* cache) {
  const Shape& s = x.shape();
  if (state.scale.size() != s.c || state.shift.size() != s.c || state.running_mean.size() != s.c ||
      state.running_var.size() != s.c) {
    throw DimensionError("batchnorm: parameter length does not match " + std::to_string(s.c) +
                         " channels");
  }
  if (mode == Mode::kTrain && s.n < 2) {
    throw DimensionError("batchnorm: train mode needs a batch of at least 2, got " + std::to_string(s.n));
  }
  Tensor<T> y(s);
  std::vector<double> inv_std(s.c);
  Tensor<T> normalized(s);
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n * plane);
  for (std::size_t c = 0; c < s.c; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (mode == Mode::kTrain) {
      for (std::size_t n = 0; n < s.n; ++n) {
        const T* p = x.sample(n) + c * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          mean += static_cast<double>(p[i]);
        }
      }
      mean /= count;
      for (std::size_t n = 0; n < s.n; ++n) {
        const T* p = x.sample(n) + c * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = static_cast<double>(p[i]) - mean;
          var += d * d;
        }
      }
      var /= count;
      state.running_mean[c] = static_cast<T>((1.0 - state.momentum) * static_cast<double>(state.running_mean[c]) +
                                             state.momentum * mean);
      state.running_var[c] = static_cast<T>((1.0 - state.momentum) * static_cast<double>(state.running_var[c]) +
                                            state.momentum * var);
    } else {
      mean = static_cast<double>(state.running_mean[c]);
      var = static_cast<double>(state.running_var[c]);
    }
    inv_std[c] = 1.0 / std::sqrt(var + state.eps);
    const double gamma = static_cast<double>(state.scale[c]);
    const double beta = static_cast<double>(state.shift[c]);
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* p = x.sample(n) + c * plane;
      T* q = y.sample(n) + c * plane;
      T* h = normalized.sample(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double xhat = (static_cast<double>(p[i]) - mean) * inv_std[c];
        h[i] = static_cast<T>(xhat);
        q[i] = static_cast<T>(gamma * xhat + beta);
      }
    }
  }
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormCache<T>& cache,
                                     const Tensor<T>& scale) {
  const Shape& s = grad_out.shape();
  if (cache.normalized.shape() != s) {
    throw DimensionError("batchnorm backward: gradient shape " + s.str() + " mismatch");
  }
  BatchNormGrads<T> grads{Tensor<T>(s), Tensor<T>(Shape{1, s.c}), Tensor<T>(Shape{1, s.c})};
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n * plane);
  for (std::size_t c = 0; c < s.c; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* dy = grad_out.sample(n) + c * plane;
      const T* xh = cache.normalized.sample(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += static_cast<double>(dy[i]);
        sum_dy_xhat += static_cast<double>(dy[i]) * static_cast<double>(xh[i]);
      }
    }
    grads.scale[c] = static_cast<T>(sum_dy_xhat);
    grads.shift[c] = static_cast<T>(sum_dy);
    const double gamma = static_cast<double>(scale[c]);
    const double k = gamma * cache.inv_std[c] / count;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* dy = grad_out.sample(n) + c * plane;
      const T* xh = cache.normalized.sample(n) + c * plane;
      T* dx = grads.input.sample(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        dx[i] = static_cast<T>(k * (count * static_cast<double>(dy[i]) - sum_dy -
                                    static_cast<double>(xh[i]) * sum_dy_xhat));
      }
    }
  }
  return grads;
}

template <typename T>
Tensor<T> maxpool2d_forward(const Tensor<T>& x, std::size_t kernel, std::size_t stride,
                            std::vector<std::uint32_t>* argmax) {
  const Shape& s = x.shape();
  const std::size_t oh = window_output(s.h, kernel, stride, 0);
  const std::size_t ow = window_output(s.w, kernel, stride, 0);
  if (kernel == 0 || oh == 0 || ow == 0) {
    throw DimensionError("maxpool: input " + s.str() + " smaller than window " + std::to_string(kernel));
  }
  Tensor<T> y(Shape{s.n, s.c, oh, ow});
  if (argmax != nullptr) {
    argmax->assign(y.size(), 0);
  }
  std::size_t o = 0;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* plane = x.sample(n) + c * s.plane();
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
          std::size_t best = oy * stride * s.w + ox * stride;
          for (std::size_t ky = 0; ky < kernel; ++ky) {
            for (std::size_t kx = 0; kx < kernel; ++kx) {
              const std::size_t idx = (oy * stride + ky) * s.w + ox * stride + kx;
              if (plane[idx] > plane[best]) {  // strict: first (lowest index) max wins
                best = idx;
              }
            }
          }
          y[o] = plane[best];
          if (argmax != nullptr) {
            (*argmax)[o] = static_cast<std::uint32_t>(best);
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> maxpool2d_backward(const Tensor<T>& grad_out, const Shape& input_shape,
                             const std::vector<std::uint32_t>& argmax) {
  if (argmax.size() != grad_out.size() || grad_out.shape().n != input_shape.n ||
      grad_out.shape().c != input_shape.c) {
    throw DimensionError("maxpool backward: gradient does not match the cached forward");
  }
  Tensor<T> dx(input_shape);
  const std::size_t out_plane = grad_out.shape().plane();
  std::size_t o = 0;
  for (std::size_t n = 0; n < input_shape.n; ++n) {
    for (std::size_t c = 0; c < input_shape.c; ++c) {
      T* plane = dx.sample(n) + c * input_shape.plane();
      for (std::size_t i = 0; i < out_plane; ++i, ++o) {
        plane[argmax[o]] += grad_out[o];
      }
    }
  }
  return dx;
}

namespace {

std::pair<std::size_t, std::size_t> adaptive_bin(std::size_t i, std::size_t length, std::size_t grid) {
  const std::size_t start = (i * length) / grid;
  const std::size_t end = ((i + 1) * length + grid - 1) / grid;
  return {start, end};
}

}  // namespace

template <typename T>
Tensor<T> adaptive_avgpool_forward(const Tensor<T>& x, std::size_t grid) {
  const Shape& s = x.shape();
  if (grid == 0) {
    throw DimensionError("adaptive pooling grid must be positive");
  }
  Tensor<T> y(Shape{s.n, s.c, grid, grid});
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* plane = x.sample(n) + c * s.plane();
      for (std::size_t gy = 0; gy < grid; ++gy) {
        const auto [y0, y1] = adaptive_bin(gy, s.h, grid);
        for (std::size_t gx = 0; gx < grid; ++gx) {
          const auto [x0, x1] = adaptive_bin(gx, s.w, grid);
          double acc = 0.0;
          for (std::size_t yy = y0; yy < y1; ++yy) {
            for (std::size_t xx = x0; xx < x1; ++xx) {
              acc += static_cast<double>(plane[yy * s.w + xx]);
            }
          }
          y.at(n, c, gy, gx) = static_cast<T>(acc / static_cast<double>((y1 - y0) * (x1 - x0)));
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> adaptive_avgpool_backward(const Tensor<T>& grad_out, const Shape& input_shape) {
  const std::size_t grid = grad_out.shape().h;
  if (grad_out.shape() != Shape{input_shape.n, input_shape.c, grid, grid}) {
    throw DimensionError("adaptive pooling backward: gradient shape mismatch");
  }
  Tensor<T> dx(input_shape);
  for (std::size_t n = 0; n < input_shape.n; ++n) {
    for (std::size_t c = 0; c < input_shape.c; ++c) {
      T* plane = dx.sample(n) + c * input_shape.plane();
      for (std::size_t gy = 0; gy < grid; ++gy) {
        const auto [y0, y1] = adaptive_bin(gy, input_shape.h, grid);
        for (std::size_t gx = 0; gx < grid; ++gx) {
          const auto [x0, x1] = adaptive_bin(gx, input_shape.w, grid);
          const T g = grad_out.at(n, c, gy, gx) / static_cast<T>((y1 - y0) * (x1 - x0));
          for (std::size_t yy = y0; yy < y1; ++yy) {
            for (std::size_t xx = x0; xx < x1; ++xx) {
              plane[yy * input_shape.w + xx] += g;
            }
          }
        }
      }
    }
  }
  return dx;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] > T{0} ? x[i] : T{0};
  }
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& x) {
  if (grad_out.shape() != x.shape()) {
    throw DimensionError("relu backward: gradient shape mismatch");
  }
  Tensor<T> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    dx[i] = x[i] > T{0} ? grad_out[i] : T{0};
  }
  return dx;
}

template <typename T>
std::vector<T> dropout_mask(std::size_t count, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
  std::vector<T> mask(count, T{1});
  if (rate == 0.0) {
    return mask;
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::mt19937_64 rng(seed);
  for (auto& m : mask) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u < rate ? T{0} : keep_scale;
  }
  return mask;
}

template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, double rate, Mode mode, std::uint64_t seed,
                          std::vector<T>* mask_out) {
  if (mode == Mode::kEval || rate == 0.0) {
    if (!(rate >= 0.0 && rate < 1.0)) {
      throw ConfigError("dropout rate must lie in [0, 1)");
    }
    if (mask_out != nullptr) {
      mask_out->assign(x.size(), T{1});
    }
    return x;
  }
  std::vector<T> mask = dropout_mask<T>(x.size(), rate, seed);
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] * mask[i];
  }
  if (mask_out != nullptr) {
    *mask_out = std::move(mask);
  }
  return y;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const std::vector<T>& mask) {
  if (mask.size() != grad_out.size()) {
    throw DimensionError("dropout backward: mask does not match gradient");
  }
  Tensor<T> dx(grad_out.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    dx[i] = grad_out[i] * mask[i];
  }
  return dx;
}

#define ISAC_ATR_INSTANTIATE_OPS(T)                                                                 \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                    std::size_t);                                                  \
  template Conv2dGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                          std::size_t);                                            \
  template Tensor<T> fc_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);             \
  template FcGrads<T> fc_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> batchnorm_forward(const Tensor<T>&, BatchNormState<T>&, Mode,                 \
                                       BatchNormCache<T>*);                                        \
  template BatchNormGrads<T> batchnorm_backward(const Tensor<T>&, const BatchNormCache<T>&,        \
                                                const Tensor<T>&);                                 \
  template Tensor<T> maxpool2d_forward(const Tensor<T>&, std::size_t, std::size_t,                 \
                                       std::vector<std::uint32_t>*);                               \
  template Tensor<T> maxpool2d_backward(const Tensor<T>&, const Shape&,                            \
                                        const std::vector<std::uint32_t>&);                        \
  template Tensor<T> adaptive_avgpool_forward(const Tensor<T>&, std::size_t);                      \
  template Tensor<T> adaptive_avgpool_backward(const Tensor<T>&, const Shape&);                    \
  template Tensor<T> relu_forward(const Tensor<T>&);                                               \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                            \
  template std::vector<T> dropout_mask<T>(std::size_t, double, std::uint64_t);                     \
  template Tensor<T> dropout_forward(const Tensor<T>&, double, Mode, std::uint64_t,                \
                                     std::vector<T>*);                                             \
  template Tensor<T> dropout_backward(const Tensor<T>&, const std::vector<T>&);

ISAC_ATR_INSTANTIATE_OPS(float)
ISAC_ATR_INSTANTIATE_OPS(double)

#undef ISAC_ATR_INSTANTIATE_OPS

}  // namespace isac_atr::nn
