// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "tissuenet/error.hpp"

namespace tissuenet {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

std::string dim_mismatch(const char* what, std::size_t got, std::size_t want) {
  return std::string(what) + " is " + std::to_string(got) + ", expected " +
         std::to_string(want);
}

struct ConvDims {
  std::size_t n, c_in, h, w, c_out, h_out, w_out, cig, cog, k;
};

ConvDims check_conv(const Tensor& input, const Tensor& weight,
                    const Tensor* bias, const ConvGeometry& geom) {
  geom.validate();
  if (input.rank() != 4) {
    fail(ErrorCategory::config,
         "conv2d input must be [N,C,H,W], got " + shape_to_string(input.shape()));
  }
  if (weight.rank() != 4) {
    fail(ErrorCategory::config, "conv2d weight must be [C_out,C_in/g,d,d], got " +
                                    shape_to_string(weight.shape()));
  }
  ConvDims c{};
  c.n = input.dim(0);
  c.c_in = input.dim(1);
  c.h = input.dim(2);
  c.w = input.dim(3);
  c.c_out = weight.dim(0);
  if (c.c_in % geom.groups != 0) {
    fail(ErrorCategory::config,
         "input channels " + std::to_string(c.c_in) +
             " not divisible by groups " + std::to_string(geom.groups));
  }
  if (c.c_out % geom.groups != 0) {
    fail(ErrorCategory::config,
         "output channels " + std::to_string(c.c_out) +
             " not divisible by groups " + std::to_string(geom.groups));
  }
  c.cig = c.c_in / geom.groups;
  c.cog = c.c_out / geom.groups;
  if (weight.dim(1) != c.cig) {
    fail(ErrorCategory::config, dim_mismatch("weight dim 1 (C_in/g)", weight.dim(1), c.cig));
  }
  if (weight.dim(2) != geom.kernel || weight.dim(3) != geom.kernel) {
    fail(ErrorCategory::config,
         "weight spatial dims " + std::to_string(weight.dim(2)) + "x" +
             std::to_string(weight.dim(3)) + " do not match kernel " +
             std::to_string(geom.kernel));
  }
  if (bias != nullptr && (bias->rank() != 1 || bias->dim(0) != c.c_out)) {
    fail(ErrorCategory::config, "bias shape " + shape_to_string(bias->shape()) +
                                    " does not match C_out " + std::to_string(c.c_out));
  }
  c.h_out = geom.out_size(c.h);
  c.w_out = geom.out_size(c.w);
  c.k = c.cig * geom.kernel * geom.kernel;
  return c;
}

bool is_pointwise(const ConvGeometry& geom) {
  return geom.kernel == 1 && geom.stride == 1 && geom.padding == 0;
}

// Column matrix [cig*d*d, h_out*w_out] for one sample and group.
void im2col(const double* x, const ConvDims& c, const ConvGeometry& g, double* col) {
  const std::size_t d = g.kernel;
  const std::size_t p = c.h_out * c.w_out;
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t ci = 0; ci < c.cig; ++ci) {
    const double* plane = x + ci * c.h * c.w;
    for (std::size_t ky = 0; ky < d; ++ky) {
      for (std::size_t kx = 0; kx < d; ++kx) {
        double* row = col + ((ci * d + ky) * d + kx) * p;
        for (std::size_t oy = 0; oy < c.h_out; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          double* out = row + oy * c.w_out;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(c.h)) {
            std::fill(out, out + c.w_out, 0.0);
            continue;
          }
          const double* in_row = plane + static_cast<std::size_t>(iy) * c.w;
          for (std::size_t ox = 0; ox < c.w_out; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            out[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(c.w))
                          ? 0.0
                          : in_row[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvDims& c, const ConvGeometry& g, double* dx) {
  const std::size_t d = g.kernel;
  const std::size_t p = c.h_out * c.w_out;
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t ci = 0; ci < c.cig; ++ci) {
    double* plane = dx + ci * c.h * c.w;
    for (std::size_t ky = 0; ky < d; ++ky) {
      for (std::size_t kx = 0; kx < d; ++kx) {
        const double* row = col + ((ci * d + ky) * d + kx) * p;
        for (std::size_t oy = 0; oy < c.h_out; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(c.h)) continue;
          double* in_row = plane + static_cast<std::size_t>(iy) * c.w;
          const double* src = row + oy * c.w_out;
          for (std::size_t ox = 0; ox < c.w_out; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(c.w)) {
              in_row[static_cast<std::size_t>(ix)] += src[ox];
            }
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t ConvGeometry::out_size(std::size_t size) const {
  const std::size_t padded = size + 2 * padding;
  if (kernel > padded) {
    fail(ErrorCategory::geometry,
         "kernel " + std::to_string(kernel) + " exceeds padded input " +
             std::to_string(padded));
  }
  return (padded - kernel) / stride + 1;
}

void ConvGeometry::validate() const {
  if (kernel == 0) fail(ErrorCategory::geometry, "kernel must be positive");
  if (stride == 0) fail(ErrorCategory::geometry, "stride must be positive");
  if (groups == 0) fail(ErrorCategory::config, "groups must be positive");
}

Tensor conv2d_reference(const Tensor& input, const Tensor& weight,
                        const Tensor* bias, const ConvGeometry& geom) {
  const ConvDims c = check_conv(input, weight, bias, geom);
  const std::size_t d = geom.kernel;
  Tensor out({c.n, c.c_out, c.h_out, c.w_out});
  for (std::size_t n = 0; n < c.n; ++n) {
    for (std::size_t co = 0; co < c.c_out; ++co) {
      const std::size_t grp = co / c.cog;
      for (std::size_t oy = 0; oy < c.h_out; ++oy) {
        for (std::size_t ox = 0; ox < c.w_out; ++ox) {
          double acc = bias != nullptr ? (*bias)[co] : 0.0;
          for (std::size_t ci = 0; ci < c.cig; ++ci) {
            const std::size_t cin = grp * c.cig + ci;
            for (std::size_t ky = 0; ky < d; ++ky) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geom.stride + ky) -
                                        static_cast<std::ptrdiff_t>(geom.padding);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(c.h)) continue;
              for (std::size_t kx = 0; kx < d; ++kx) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geom.stride + kx) -
                                          static_cast<std::ptrdiff_t>(geom.padding);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(c.w)) continue;
                acc += input[((n * c.c_in + cin) * c.h + static_cast<std::size_t>(iy)) * c.w +
                             static_cast<std::size_t>(ix)] *
                       weight[((co * c.cig + ci) * d + ky) * d + kx];
              }
            }
          }
          out[((n * c.c_out + co) * c.h_out + oy) * c.w_out + ox] = acc;
        }
      }
    }
  }
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias,
              const ConvGeometry& geom) {
  const ConvDims c = check_conv(input, weight, bias, geom);
  const std::size_t p = c.h_out * c.w_out;
  Tensor out({c.n, c.c_out, c.h_out, c.w_out});
  const bool pointwise = is_pointwise(geom);
  AlignedBuffer col(pointwise ? 0 : c.k * p);
  for (std::size_t n = 0; n < c.n; ++n) {
    for (std::size_t grp = 0; grp < geom.groups; ++grp) {
      const double* x = input.data() + (n * c.c_in + grp * c.cig) * c.h * c.w;
      const double* cols = x;
      if (!pointwise) {
        im2col(x, c, geom, col.data());
        cols = col.data();
      }
      ConstMapMat wg(weight.data() + grp * c.cog * c.k, static_cast<Eigen::Index>(c.cog),
                     static_cast<Eigen::Index>(c.k));
      ConstMapMat cm(cols, static_cast<Eigen::Index>(c.k), static_cast<Eigen::Index>(p));
      MapMat y(out.data() + (n * c.c_out + grp * c.cog) * p,
               static_cast<Eigen::Index>(c.cog), static_cast<Eigen::Index>(p));
      y.noalias() = wg * cm;
      if (bias != nullptr) {
        for (std::size_t o = 0; o < c.cog; ++o) {
          y.row(static_cast<Eigen::Index>(o)).array() += (*bias)[grp * c.cog + o];
        }
      }
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weight,
                            bool has_bias, const Tensor& grad_out,
                            const ConvGeometry& geom) {
  const ConvDims c = check_conv(input, weight, nullptr, geom);
  const Shape expected{c.n, c.c_out, c.h_out, c.w_out};
  if (grad_out.shape() != expected) {
    fail(ErrorCategory::config, "conv2d grad_out shape " +
                                    shape_to_string(grad_out.shape()) + ", expected " +
                                    shape_to_string(expected));
  }
  const std::size_t p = c.h_out * c.w_out;
  Conv2dGrads g{Tensor(input.shape()), Tensor(weight.shape()), std::nullopt};
  if (has_bias) g.bias = Tensor({c.c_out});
  const bool pointwise = is_pointwise(geom);
  AlignedBuffer col(pointwise ? 0 : c.k * p);
  AlignedBuffer dcol(pointwise ? 0 : c.k * p);
  for (std::size_t n = 0; n < c.n; ++n) {
    for (std::size_t grp = 0; grp < geom.groups; ++grp) {
      const std::size_t x_off = (n * c.c_in + grp * c.cig) * c.h * c.w;
      const double* x = input.data() + x_off;
      const double* cols = x;
      if (!pointwise) {
        im2col(x, c, geom, col.data());
        cols = col.data();
      }
      ConstMapMat wg(weight.data() + grp * c.cog * c.k, static_cast<Eigen::Index>(c.cog),
                     static_cast<Eigen::Index>(c.k));
      ConstMapMat cm(cols, static_cast<Eigen::Index>(c.k), static_cast<Eigen::Index>(p));
      ConstMapMat dy(grad_out.data() + (n * c.c_out + grp * c.cog) * p,
                     static_cast<Eigen::Index>(c.cog), static_cast<Eigen::Index>(p));
      MapMat dw(g.weight.data() + grp * c.cog * c.k, static_cast<Eigen::Index>(c.cog),
                static_cast<Eigen::Index>(c.k));
      dw.noalias() += dy * cm.transpose();
      if (pointwise) {
        MapMat dx(g.input.data() + x_off, static_cast<Eigen::Index>(c.k),
                  static_cast<Eigen::Index>(p));
        dx.noalias() += wg.transpose() * dy;
      } else {
        MapMat dc(dcol.data(), static_cast<Eigen::Index>(c.k), static_cast<Eigen::Index>(p));
        dc.noalias() = wg.transpose() * dy;
        col2im_add(dcol.data(), c, geom, g.input.data() + x_off);
      }
      if (has_bias) {
        for (std::size_t o = 0; o < c.cog; ++o) {
          (*g.bias)[grp * c.cog + o] += dy.row(static_cast<Eigen::Index>(o)).sum();
        }
      }
    }
  }
  return g;
}

namespace {

void check_rank2(const Tensor& t, const char* name) {
  if (t.rank() != 2) {
    fail(ErrorCategory::config, std::string(name) + " must be rank 2, got " +
                                    shape_to_string(t.shape()));
  }
}

ConstMapMat as_matrix(const Tensor& t) {
  return ConstMapMat(t.data(), static_cast<Eigen::Index>(t.dim(0)),
                     static_cast<Eigen::Index>(t.dim(1)));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_rank2(a, "matmul lhs");
  check_rank2(b, "matmul rhs");
  if (a.dim(1) != b.dim(0)) {
    fail(ErrorCategory::config, "matmul inner dimensions " + shape_to_string(a.shape()) +
                                    " x " + shape_to_string(b.shape()));
  }
  Tensor out({a.dim(0), b.dim(1)});
  MapMat(out.data(), static_cast<Eigen::Index>(a.dim(0)), static_cast<Eigen::Index>(b.dim(1)))
      .noalias() = as_matrix(a) * as_matrix(b);
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  check_rank2(a, "matmul_tn lhs");
  check_rank2(b, "matmul_tn rhs");
  if (a.dim(0) != b.dim(0)) {
    fail(ErrorCategory::config, "matmul_tn inner dimensions " +
                                    shape_to_string(a.shape()) + " x " +
                                    shape_to_string(b.shape()));
  }
  Tensor out({a.dim(1), b.dim(1)});
  MapMat(out.data(), static_cast<Eigen::Index>(a.dim(1)), static_cast<Eigen::Index>(b.dim(1)))
      .noalias() = as_matrix(a).transpose() * as_matrix(b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_rank2(a, "matmul_nt lhs");
  check_rank2(b, "matmul_nt rhs");
  if (a.dim(1) != b.dim(1)) {
    fail(ErrorCategory::config, "matmul_nt inner dimensions " +
                                    shape_to_string(a.shape()) + " x " +
                                    shape_to_string(b.shape()));
  }
  Tensor out({a.dim(0), b.dim(0)});
  MapMat(out.data(), static_cast<Eigen::Index>(a.dim(0)), static_cast<Eigen::Index>(b.dim(0)))
      .noalias() = as_matrix(a) * as_matrix(b).transpose();
  return out;
}

std::vector<Tensor> channel_split(const Tensor& input,
                                  const std::vector<std::size_t>& sizes) {
  if (input.rank() < 2) {
    fail(ErrorCategory::config, "channel_split needs rank >= 2, got " +
                                    shape_to_string(input.shape()));
  }
  const std::size_t channels = input.dim(1);
  std::size_t total = 0;
  for (std::size_t s : sizes) {
    if (s == 0) fail(ErrorCategory::partition, "channel piece of size 0");
    total += s;
  }
  if (total != channels) {
    fail(ErrorCategory::partition, "piece sizes sum to " + std::to_string(total) +
                                       " but input has " + std::to_string(channels) +
                                       " channels");
  }
  const std::size_t n = input.dim(0);
  const std::size_t inner = input.size() / (n * channels);
  std::vector<Tensor> pieces;
  pieces.reserve(sizes.size());
  std::size_t start = 0;
  for (std::size_t s : sizes) {
    Shape shape = input.shape();
    shape[1] = s;
    Tensor piece(shape);
    for (std::size_t i = 0; i < n; ++i) {
      std::memcpy(piece.data() + i * s * inner,
                  input.data() + (i * channels + start) * inner, s * inner * sizeof(double));
    }
    pieces.push_back(std::move(piece));
    start += s;
  }
  return pieces;
}

Tensor channel_concat(const std::vector<Tensor>& pieces) {
  if (pieces.empty()) fail(ErrorCategory::config, "channel_concat of zero pieces");
  const Tensor& first = pieces.front();
  if (first.rank() < 2) {
    fail(ErrorCategory::config, "channel_concat needs rank >= 2, got " +
                                    shape_to_string(first.shape()));
  }
  std::size_t channels = 0;
  for (const Tensor& p : pieces) {
    bool same = p.rank() == first.rank();
    for (std::size_t a = 0; same && a < p.rank(); ++a) {
      if (a != 1 && p.dim(a) != first.dim(a)) same = false;
    }
    if (!same) {
      fail(ErrorCategory::config, "channel_concat piece " + shape_to_string(p.shape()) +
                                      " incompatible with " + shape_to_string(first.shape()));
    }
    channels += p.dim(1);
  }
  Shape shape = first.shape();
  shape[1] = channels;
  Tensor out(shape);
  const std::size_t n = first.dim(0);
  const std::size_t inner = first.size() / (n * first.dim(1));
  std::size_t start = 0;
  for (const Tensor& p : pieces) {
    const std::size_t s = p.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
      std::memcpy(out.data() + (i * channels + start) * inner, p.data() + i * s * inner,
                  s * inner * sizeof(double));
    }
    start += s;
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  if (x.shape() != grad_out.shape()) {
    fail(ErrorCategory::config, "relu_backward shape mismatch");
  }
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(x[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

MaxPoolResult max_pool2d(const Tensor& x, std::size_t window, std::size_t stride) {
  if (x.rank() != 4) {
    fail(ErrorCategory::config, "max_pool2d input must be [N,C,H,W], got " +
                                    shape_to_string(x.shape()));
  }
  const ConvGeometry geom{window, stride, 0, 1};
  geom.validate();
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t ho = geom.out_size(h), wo = geom.out_size(w);
  MaxPoolResult r{Tensor({n, c, ho, wo}), std::vector<std::size_t>(n * c * ho * wo)};
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox, ++o) {
        std::size_t best = base + oy * stride * w + ox * stride;
        for (std::size_t ky = 0; ky < window; ++ky) {
          for (std::size_t kx = 0; kx < window; ++kx) {
            const std::size_t idx = base + (oy * stride + ky) * w + ox * stride + kx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        r.output[o] = x[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

Tensor max_pool2d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                           const Tensor& grad_out) {
  if (argmax.size() != grad_out.size()) {
    fail(ErrorCategory::config, "max_pool2d_backward argmax/grad size mismatch");
  }
  Tensor g(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += grad_out[i];
  return g;
}

Tensor global_avg_pool(const Tensor& x) {
  if (x.rank() != 4) {
    fail(ErrorCategory::config, "global_avg_pool input must be [N,C,H,W], got " +
                                    shape_to_string(x.shape()));
  }
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor y({n, c});
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc += x[plane * hw + i];
    y[plane] = acc / static_cast<double>(hw);
  }
  return y;
}

Tensor global_avg_pool_backward(const Shape& input_shape, const Tensor& grad_out) {
  Tensor g(input_shape);
  const std::size_t hw = input_shape[2] * input_shape[3];
  if (grad_out.size() * hw != g.size()) {
    fail(ErrorCategory::config, "global_avg_pool_backward shape mismatch");
  }
  const double scale = 1.0 / static_cast<double>(hw);
  for (std::size_t plane = 0; plane < grad_out.size(); ++plane) {
    std::fill_n(g.data() + plane * hw, hw, grad_out[plane] * scale);
  }
  return g;
}

Tensor softmax(const Tensor& logits) {
  check_rank2(logits, "softmax input");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor p(logits.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.data() + i * k;
    const double peak = *std::max_element(row, row + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      p[i * k + j] = std::exp(row[j] - peak);
      total += p[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) p[i * k + j] /= total;
  }
  return p;
}

}  // namespace tissuenet
