// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

// Reference computations used only by tests. None of these call into the
// library's kernels or ops, so they stay independent of the code they check.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "saicl/rng.hpp"
#include "saicl/tensor.hpp"

namespace saicl::oracle {

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0,
                            bool requires_grad = false) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = scale * rng.normal();
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

// Einsum by enumerating every assignment of every axis letter.
inline std::vector<double> naive_einsum(const std::string& spec, const Tensor& a,
                                        const Tensor& b, Shape* out_shape = nullptr) {
  const auto arrow = spec.find("->");
  const auto comma = spec.find(',');
  const std::string sa = spec.substr(0, comma);
  const std::string sb = spec.substr(comma + 1, arrow - comma - 1);
  const std::string so = spec.substr(arrow + 2);
  std::map<char, std::size_t> extent;
  for (std::size_t i = 0; i < sa.size(); ++i) extent[sa[i]] = a.shape()[i];
  for (std::size_t i = 0; i < sb.size(); ++i) extent[sb[i]] = b.shape()[i];
  std::string letters;
  for (const auto& [c, e] : extent) letters += c;

  Shape oshape;
  for (char c : so) oshape.push_back(extent[c]);
  if (out_shape) *out_shape = oshape;
  std::vector<double> out(shape_numel(oshape), 0.0);

  auto offset = [&](const std::string& axes, const Shape& shape,
                    const std::map<char, std::size_t>& idx) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < axes.size(); ++i) off = off * shape[i] + idx.at(axes[i]);
    return off;
  };

  std::map<char, std::size_t> idx;
  for (char c : letters) idx[c] = 0;
  while (true) {
    out[offset(so, oshape, idx)] +=
        a.data()[offset(sa, a.shape(), idx)] * b.data()[offset(sb, b.shape(), idx)];
    std::size_t pos = letters.size();
    while (pos > 0) {
      const char c = letters[pos - 1];
      if (++idx[c] < extent[c]) break;
      idx[c] = 0;
      --pos;
    }
    if (pos == 0) break;
  }
  return out;
}

inline double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

// Central-difference gradient of a scalar function with respect to one
// tensor, evaluated by perturbing a private copy of its values.
inline std::vector<double> numeric_gradient(
    const std::function<double(const std::vector<Tensor>&)>& f,
    std::vector<Tensor> inputs, std::size_t which, double step = 1e-5) {
  const Tensor base = inputs[which];
  std::vector<double> values(base.data().begin(), base.data().end());
  std::vector<double> grad(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto plus = values;
    auto minus = values;
    plus[i] += step;
    minus[i] -= step;
    inputs[which] = Tensor::from(base.shape(), plus);
    const double fp = f(inputs);
    inputs[which] = Tensor::from(base.shape(), minus);
    const double fm = f(inputs);
    grad[i] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

// ||a - n|| / (||a|| + ||n||), zero when both vanish.
inline double relative_error(std::span<const double> analytic,
                             std::span<const double> numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::sqrt(na) + std::sqrt(nn);
  return denom < 1e-12 ? std::sqrt(diff) : std::sqrt(diff) / denom;
}

}  // namespace saicl::oracle

namespace saicl::oracle {

// Largest per-input relative error between backward() and central
// differences for a scalar-valued builder.
inline double gradcheck(const std::function<Tensor(const std::vector<Tensor>&)>& build,
                        const std::vector<Tensor>& inputs, double step = 1e-5) {
  std::vector<Tensor> tracked;
  for (const Tensor& t : inputs)
    tracked.push_back(Tensor::from(t.shape(), {t.data().begin(), t.data().end()}, true));
  GradTape::current().clear();
  backward(build(tracked));
  auto value = [&](const std::vector<Tensor>& xs) {
    NoGradGuard guard;
    return build(xs).item();
  };
  std::vector<Tensor> plain;
  for (const Tensor& t : inputs) plain.push_back(t.detach());
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto numeric = numeric_gradient(value, plain, i, step);
    std::vector<double> analytic(numeric.size(), 0.0);
    if (tracked[i].has_grad())
      analytic.assign(tracked[i].grad().begin(), tracked[i].grad().end());
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

}  // namespace saicl::oracle

namespace saicl::oracle {

// Gradient check over parameters that are owned elsewhere (a model): the
// analytic gradient comes from one backward pass, the numeric one from
// perturbing each parameter in place. Returns the worst per-tensor error.
inline double parameter_gradcheck(const std::function<Tensor()>& loss,
                                  std::vector<Tensor> params, double step = 1e-5) {
  for (Tensor& p : params) p.zero_grad();
  GradTape::current().clear();
  backward(loss());
  double worst = 0.0;
  for (Tensor& p : params) {
    std::vector<double> analytic(p.numel(), 0.0);
    if (p.has_grad()) analytic.assign(p.grad().begin(), p.grad().end());
    std::vector<double> numeric(p.numel());
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      NoGradGuard guard;
      values[i] = saved + step;
      const double fp = loss().item();
      values[i] = saved - step;
      const double fm = loss().item();
      values[i] = saved;
      numeric[i] = (fp - fm) / (2.0 * step);
    }
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

}  // namespace saicl::oracle
