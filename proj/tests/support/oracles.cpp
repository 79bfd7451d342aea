// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "tissuenet/loss.hpp"

namespace tissuenet::oracle {

Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (double& v : t.values()) v = dist(gen);
  return t;
}

Tensor loop_conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias,
                   std::size_t stride, std::size_t padding, std::size_t groups,
                   std::uint64_t* macs) {
  const std::size_t n = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t c_out = weight.dim(0), cig = weight.dim(1), d = weight.dim(2);
  if (cig * groups != c_in) throw std::invalid_argument("oracle: channel/group mismatch");
  const std::size_t hp = h + 2 * padding, wp = w + 2 * padding;
  std::vector<double> padded(n * c_in * hp * wp, 0.0);
  for (std::size_t i = 0; i < n * c_in; ++i) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        padded[(i * hp + y + padding) * wp + x + padding] = input[(i * h + y) * w + x];
      }
    }
  }
  const std::size_t ho = (hp - d) / stride + 1, wo = (wp - d) / stride + 1;
  const std::size_t cog = c_out / groups;
  Tensor out({n, c_out, ho, wo});
  std::uint64_t count = 0;
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < c_out; ++o) {
      const std::size_t first_in = (o / cog) * cig;
      for (std::size_t y = 0; y < ho; ++y) {
        for (std::size_t x = 0; x < wo; ++x) {
          double acc = bias ? (*bias)[o] : 0.0;
          for (std::size_t k = 0; k < cig; ++k) {
            for (std::size_t i = 0; i < d; ++i) {
              for (std::size_t j = 0; j < d; ++j) {
                acc += padded[((b * c_in + first_in + k) * hp + y * stride + i) * wp + x * stride + j] *
                       weight[((o * cig + k) * d + i) * d + j];
                ++count;
              }
            }
          }
          out[((b * c_out + o) * ho + y) * wo + x] = acc;
        }
      }
    }
  }
  if (macs) *macs += count / n;
  return out;
}

Tensor triple_loop_matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
  Tensor out({m, p});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t q = 0; q < k; ++q) acc += a[i * k + q] * b[q * p + j];
      out[i * p + j] = acc;
    }
  }
  return out;
}

Enumerated enumerate_stacked_conv(StackedLayer& layer, const Shape& sample_input) {
  Enumerated e;
  for (std::size_t u = 0; u < layer.unit_count(); ++u) {
    BasicUnit& unit = layer.unit(u);
    auto& left = dynamic_cast<Conv2dLayer&>(unit.left());
    auto& right = dynamic_cast<Conv2dLayer&>(unit.right());
    e.params += left.weight().value.size() + right.weight().value.size();
    const Tensor x({1, unit.c_in(), sample_input[1], sample_input[2]}, 0.5);
    const Tensor h = loop_conv2d(x, left.weight().value, nullptr, left.geometry().stride,
                                 left.geometry().padding, 1, &e.macs);
    loop_conv2d(h, right.weight().value, nullptr, right.geometry().stride,
                right.geometry().padding, 1, &e.macs);
  }
  return e;
}

namespace {

// Copies src [o, i, ...] into dst at block offset (row, col) of dims 0 and 1.
void place_block(const Tensor& src, Tensor& dst, std::size_t row, std::size_t col) {
  const std::size_t o = src.dim(0), i = src.dim(1);
  const std::size_t inner = src.size() / (o * i);
  const std::size_t dst_i = dst.dim(1);
  for (std::size_t a = 0; a < o; ++a) {
    for (std::size_t b = 0; b < i; ++b) {
      for (std::size_t k = 0; k < inner; ++k) {
        dst[((row + a) * dst_i + col + b) * inner + k] = src[(a * i + b) * inner + k];
      }
    }
  }
}

}  // namespace

BlockDiagonal block_diagonal_equivalent(StackedLayer& layer) {
  std::size_t cin = 0, ch = 0, cout = 0;
  for (std::size_t u = 0; u < layer.unit_count(); ++u) {
    cin += layer.unit(u).c_in();
    ch += layer.unit(u).c_h();
    cout += layer.unit(u).c_out();
  }
  BlockDiagonal bd;
  if (layer.kind() == LayerKind::stacked_conv) {
    auto& l0 = dynamic_cast<Conv2dLayer&>(layer.unit(0).left());
    auto& r0 = dynamic_cast<Conv2dLayer&>(layer.unit(0).right());
    auto left = std::make_unique<Conv2dLayer>("bd.left", cin, ch, l0.geometry(), true);
    auto right = std::make_unique<Conv2dLayer>("bd.right", ch, cout, r0.geometry(), true);
    left->weight().value.fill(0.0);
    right->weight().value.fill(0.0);
    std::size_t oi = 0, oh = 0, oo = 0;
    for (std::size_t u = 0; u < layer.unit_count(); ++u) {
      auto& lu = dynamic_cast<Conv2dLayer&>(layer.unit(u).left());
      auto& ru = dynamic_cast<Conv2dLayer&>(layer.unit(u).right());
      place_block(lu.weight().value, left->weight().value, oh, oi);
      place_block(ru.weight().value, right->weight().value, oo, oh);
      for (std::size_t k = 0; k < lu.out_channels(); ++k) left->bias()->value[oh + k] = lu.bias()->value[k];
      for (std::size_t k = 0; k < ru.out_channels(); ++k) right->bias()->value[oo + k] = ru.bias()->value[k];
      oi += lu.in_channels();
      oh += lu.out_channels();
      oo += ru.out_channels();
    }
    bd.left = std::move(left);
    bd.right = std::move(right);
  } else {
    // Dense weights are [in, out]; blocks go at (input offset, output offset).
    auto left = std::make_unique<DenseLayer>("bd.left", cin, ch, true);
    auto right = std::make_unique<DenseLayer>("bd.right", ch, cout, true);
    left->weight().value.fill(0.0);
    right->weight().value.fill(0.0);
    std::size_t oi = 0, oh = 0, oo = 0;
    for (std::size_t u = 0; u < layer.unit_count(); ++u) {
      auto& lu = dynamic_cast<DenseLayer&>(layer.unit(u).left());
      auto& ru = dynamic_cast<DenseLayer&>(layer.unit(u).right());
      place_block(lu.weight().value, left->weight().value, oi, oh);
      place_block(ru.weight().value, right->weight().value, oh, oo);
      for (std::size_t k = 0; k < lu.out_features(); ++k) left->bias()->value[oh + k] = lu.bias()->value[k];
      for (std::size_t k = 0; k < ru.out_features(); ++k) right->bias()->value[oo + k] = ru.bias()->value[k];
      oi += lu.in_features();
      oh += lu.out_features();
      oo += ru.out_features();
    }
    bd.left = std::move(left);
    bd.right = std::move(right);
  }
  return bd;
}

double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
  return std::sqrt(diff) / scale;
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> at, double step) {
  std::vector<double> g(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double keep = at[i];
    at[i] = keep + step;
    const double up = f(at);
    at[i] = keep - step;
    const double down = f(at);
    at[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

namespace {

double weighted_sum(const Tensor& y, const Tensor& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

std::vector<double> as_vector(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

namespace {

struct MaskedGradient {
  std::vector<double> numeric;
  std::vector<bool> keep;
};

bool one_sided_slopes_agree(const std::function<double(const std::vector<double>&)>& f,
                            std::vector<double>& at, std::size_t i, double center, double step,
                            double& central) {
  const double keep = at[i];
  at[i] = keep + step;
  const double up = f(at);
  at[i] = keep - step;
  const double down = f(at);
  at[i] = keep;
  const double fwd = (up - center) / step;
  const double bwd = (center - down) / step;
  central = (up - down) / (2.0 * step);
  return std::abs(fwd - bwd) <= 1e-6 * std::max({1.0, std::abs(fwd), std::abs(bwd)});
}

// A coordinate whose step straddles a kink is retried once at a step small
// enough that crossing is unlikely; it is skipped only if that also fails.
MaskedGradient piecewise_linear_gradient(const std::function<double(const std::vector<double>&)>& f,
                                         std::vector<double> at, double step,
                                         std::size_t& refined) {
  MaskedGradient g{std::vector<double>(at.size()), std::vector<bool>(at.size(), true)};
  const double center = f(at);
  for (std::size_t i = 0; i < at.size(); ++i) {
    if (one_sided_slopes_agree(f, at, i, center, step, g.numeric[i])) continue;
    ++refined;
    g.keep[i] = one_sided_slopes_agree(f, at, i, center, step * 1e-3, g.numeric[i]);
  }
  return g;
}

double masked_error(const std::vector<double>& analytic, const MaskedGradient& g,
                    GradCheck& counts) {
  std::vector<double> a, n;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    if (g.keep[i]) {
      a.push_back(analytic[i]);
      n.push_back(g.numeric[i]);
    } else {
      ++counts.skipped;
    }
  }
  counts.checked += a.size();
  return relative_error(a, n);
}

}  // namespace

GradCheck finite_difference_check(Layer& layer, const Tensor& x, std::uint64_t seed, double step) {
  const Tensor y0 = layer.forward(x);
  const Tensor r = random_tensor(y0.shape(), seed ^ 0xABCDEFULL);
  for (Parameter* p : layer.parameters()) p->grad.fill(0.0);
  const Tensor dx = layer.backward(r);

  GradCheck out;
  Tensor probe = x;
  const auto loss_at_input = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) probe[i] = v[i];
    return weighted_sum(layer.forward(probe), r);
  };
  out.input_error =
      masked_error(as_vector(dx), piecewise_linear_gradient(loss_at_input, as_vector(x), step, out.refined), out);

  for (Parameter* p : layer.parameters()) {
    const std::vector<double> analytic = as_vector(p->grad);
    const auto loss_at_param = [&](const std::vector<double>& v) {
      for (std::size_t i = 0; i < v.size(); ++i) p->value[i] = v[i];
      return weighted_sum(layer.forward(x), r);
    };
    const std::vector<double> original = as_vector(p->value);
    const double err =
        masked_error(analytic, piecewise_linear_gradient(loss_at_param, original, step, out.refined), out);
    for (std::size_t i = 0; i < original.size(); ++i) p->value[i] = original[i];
    if (err > out.param_error) {
      out.param_error = err;
      out.worst_param = p->name;
    }
  }
  return out;
}

namespace {

std::unique_ptr<StackedLayer> random_stacked(const std::string& name, UnitKind kind,
                                             std::size_t m, std::size_t c, std::size_t c_h,
                                             std::size_t d, std::size_t stride) {
  std::vector<std::unique_ptr<BasicUnit>> units;
  for (std::size_t u = 0; u < m; ++u) {
    units.push_back(std::make_unique<BasicUnit>(name + ".unit" + std::to_string(u), kind, c, c_h,
                                                c, d, stride, d / 2));
  }
  return std::make_unique<StackedLayer>(name, std::move(units));
}

}  // namespace

void randomize_biases(Layer& layer, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (Parameter* p : layer.parameters()) {
    if (p->name.ends_with(".bias")) {
      for (double& v : p->value.values()) v = dist(gen);
    }
  }
}

std::vector<GradCase> make_grad_cases(std::uint64_t seed, std::size_t per_kind) {
  std::mt19937_64 gen(seed);
  const auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
  };
  std::vector<GradCase> cases;
  Rng init(seed);
  for (std::size_t i = 0; i < per_kind; ++i) {
    const std::size_t n = pick(1, 2);
    const std::size_t h = pick(4, 6), w = pick(4, 6);
    {
      const std::size_t c_in = pick(1, 3), c_out = pick(1, 3), d = pick(0, 1) * 2 + 1;
      auto l = std::make_unique<Conv2dLayer>("conv", c_in, c_out,
                                             ConvGeometry{d, pick(1, 2), pick(0, d / 2), 1});
      cases.push_back({"normal-conv", std::move(l), random_tensor({n, c_in, h, w}, gen())});
    }
    {
      const std::size_t m = pick(1, 3), c = pick(1, 2), d = pick(0, 1) * 2 + 1;
      auto l = random_stacked("stacked", UnitKind::conv, m, c, pick(1, 3), d, pick(1, 2));
      cases.push_back({"stacked-conv", std::move(l), random_tensor({n, m * c, h, w}, gen())});
    }
    {
      const std::size_t in = pick(2, 7), out = pick(1, 5);
      auto l = std::make_unique<DenseLayer>("dense", in, out);
      cases.push_back({"dense", std::move(l), random_tensor({n + 1, in}, gen())});
    }
    {
      const std::size_t m = pick(1, 4), c = pick(1, 3);
      auto l = random_stacked("stacked", UnitKind::dense, m, c, pick(1, 4), 1, 1);
      cases.push_back({"stacked-dense", std::move(l), random_tensor({n + 1, m * c}, gen())});
    }
    {
      // Alternate identity and projection shortcuts.
      const std::size_t c = 2 * pick(1, 2), c_out = (i % 2 == 0) ? c : c + 2;
      const std::size_t stride = (c_out == c) ? 1 : 2;
      std::vector<LayerPtr> main;
      main.push_back(std::make_unique<Conv2dLayer>("res.a", c, c_out, ConvGeometry{3, stride, 1, 1}));
      main.push_back(random_stacked("res.b", UnitKind::conv, c_out / 2, 2, pick(1, 3), 3, 1));
      LayerPtr shortcut;
      if (c_out != c) {
        shortcut = std::make_unique<Conv2dLayer>("res.sc", c, c_out, ConvGeometry{1, stride, 0, 1});
      }
      auto l = std::make_unique<ResidualBlock>("res", std::move(main), std::move(shortcut));
      cases.push_back({"residual-block", std::move(l), random_tensor({n, c, h, w}, gen())});
    }
    {
      // Distinct, well separated values keep each window's argmax stable under the step.
      const std::size_t c = pick(1, 3);
      Tensor x({n, c, 2 * h, 2 * w});
      std::vector<std::size_t> order(x.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::shuffle(order.begin(), order.end(), gen);
      for (std::size_t k = 0; k < order.size(); ++k) x[k] = 0.05 * static_cast<double>(order[k]);
      const std::size_t window = pick(2, 3);
      cases.push_back({"pool", std::make_unique<MaxPool2dLayer>("pool", window, pick(1, window)),
                       std::move(x)});
    }
    {
      const std::size_t c = pick(1, 4);
      cases.push_back({"global-avg-pool", std::make_unique<GlobalAvgPoolLayer>("gap"),
                       random_tensor({n, c, h, w}, gen())});
    }
  }
  // Library init zeroes biases; with a dead hidden channel that leaves the
  // next pre-activation exactly on the ReLU kink, so biases get random values.
  for (GradCase& c : cases) {
    c.layer->initialize(init);
    randomize_biases(*c.layer, gen());
  }
  return cases;
}

double cross_entropy_gradient_error(std::uint64_t seed, std::size_t batch, std::size_t classes,
                                    double step) {
  std::mt19937_64 gen(seed);
  const Tensor logits = random_tensor({batch, classes}, gen(), -3.0, 3.0);
  std::vector<std::uint8_t> labels(batch);
  for (auto& l : labels) l = static_cast<std::uint8_t>(gen() % classes);
  const LossResult analytic = cross_entropy(logits, labels);
  const auto f = [&](const std::vector<double>& v) {
    return cross_entropy(Tensor(logits.shape(), v), labels).loss;
  };
  return relative_error(as_vector(analytic.grad), numeric_gradient(f, as_vector(logits), step));
}

}  // namespace tissuenet::oracle
