// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include "saicl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "saicl/error.hpp"
#include "saicl/kernels.hpp"
#include "strided.hpp"
#include "tensor_impl.hpp"

namespace saicl {

using detail::accumulate;
using detail::impl;
using detail::make_output;
using detail::record;

namespace {

constexpr double kMaskedRowThreshold = kMaskSentinel / 2;

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw Error(std::string(op) + ": undefined tensor");
}

std::size_t last_extent(const Tensor& x) { return x.shape().back(); }

// Sums g (shaped like a) into the broadcast operand's layout.
std::vector<double> reduce_to(std::span<const double> g, const Shape& a,
                              const Shape& b,
                              std::span<const std::size_t> bstr) {
  std::vector<double> out(shape_numel(b), 0.0);
  detail::for_each_broadcast_run(
      a, bstr, [&](std::size_t ao, std::size_t bo, std::size_t n, std::size_t s) {
        if (s == 0) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[ao + j];
          out[bo] += acc;
        } else {
          for (std::size_t j = 0; j < n; ++j) out[bo + j] += g[ao + j];
        }
      });
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_defined(a, "add");
  require_defined(b, "add");
  const auto& ks = kernels::active();
  std::vector<double> out(a.numel());
  const bool same = a.shape() == b.shape();
  std::vector<std::size_t> bstr;
  if (same) {
    ks.add(a.data().data(), b.data().data(), out.data(), out.size());
  } else {
    bstr = detail::broadcast_strides(a.shape(), b.shape());
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    detail::for_each_broadcast_run(
        a.shape(), bstr,
        [&](std::size_t ao, std::size_t bo, std::size_t n, std::size_t s) {
          if (s == 1) {
            ks.add(ad + ao, bd + bo, out.data() + ao, n);
          } else {
            for (std::size_t j = 0; j < n; ++j) out[ao + j] = ad[ao + j] + bd[bo];
          }
        });
  }
  Tensor y = make_output(a.shape(), std::move(out), {&a, &b});
  if (y.requires_grad()) {
    record("add", y,
           [ai = impl(a), bi = impl(b), same, bstr](std::span<const double> g) {
             accumulate(ai, g);
             if (!bi->requires_grad) return;
             if (same) {
               accumulate(bi, g);
             } else {
               accumulate(bi, reduce_to(g, ai->shape, bi->shape, bstr));
             }
           });
  }
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_defined(a, "mul");
  require_defined(b, "mul");
  const auto& ks = kernels::active();
  std::vector<double> out(a.numel());
  const bool same = a.shape() == b.shape();
  std::vector<std::size_t> bstr =
      same ? std::vector<std::size_t>{} : detail::broadcast_strides(a.shape(), b.shape());
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  if (same) {
    ks.mul(ad, bd, out.data(), out.size());
  } else {
    detail::for_each_broadcast_run(
        a.shape(), bstr,
        [&](std::size_t ao, std::size_t bo, std::size_t n, std::size_t s) {
          if (s == 1) {
            ks.mul(ad + ao, bd + bo, out.data() + ao, n);
          } else {
            ks.scale(ad + ao, bd[bo], out.data() + ao, n);
          }
        });
  }
  Tensor y = make_output(a.shape(), std::move(out), {&a, &b});
  if (y.requires_grad()) {
    record("mul", y,
           [ai = impl(a), bi = impl(b), same, bstr](std::span<const double> g) {
             const auto& ks = kernels::active();
             if (same) {
               std::vector<double> tmp(g.size());
               if (ai->requires_grad) {
                 ks.mul(g.data(), bi->data.data(), tmp.data(), tmp.size());
                 accumulate(ai, tmp);
               }
               if (bi->requires_grad) {
                 ks.mul(g.data(), ai->data.data(), tmp.data(), tmp.size());
                 accumulate(bi, tmp);
               }
               return;
             }
             if (ai->requires_grad) {
               std::vector<double> ga(g.size());
               detail::for_each_broadcast_run(
                   ai->shape, bstr,
                   [&](std::size_t ao, std::size_t bo, std::size_t n, std::size_t s) {
                     for (std::size_t j = 0; j < n; ++j)
                       ga[ao + j] = g[ao + j] * bi->data[bo + j * s];
                   });
               accumulate(ai, ga);
             }
             if (bi->requires_grad) {
               std::vector<double> prod(g.size());
               ks.mul(g.data(), ai->data.data(), prod.data(), prod.size());
               accumulate(bi, reduce_to(prod, ai->shape, bi->shape, bstr));
             }
           });
  }
  return y;
}

Tensor scale(const Tensor& a, double factor) {
  require_defined(a, "scale");
  std::vector<double> out(a.numel());
  kernels::active().scale(a.data().data(), factor, out.data(), out.size());
  Tensor y = make_output(a.shape(), std::move(out), {&a});
  if (y.requires_grad()) {
    record("scale", y, [ai = impl(a), factor](std::span<const double> g) {
      std::vector<double> ga(g.size());
      kernels::active().scale(g.data(), factor, ga.data(), ga.size());
      accumulate(ai, ga);
    });
  }
  return y;
}

Tensor relu(const Tensor& a) {
  require_defined(a, "relu");
  std::vector<double> out(a.numel());
  const auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  Tensor y = make_output(a.shape(), std::move(out), {&a});
  if (y.requires_grad()) {
    record("relu", y, [ai = impl(a)](std::span<const double> g) {
      std::vector<double> ga(g.size());
      for (std::size_t i = 0; i < g.size(); ++i)
        ga[i] = ai->data[i] > 0.0 ? g[i] : 0.0;
      accumulate(ai, ga);
    });
  }
  return y;
}

Tensor log(const Tensor& a) {
  require_defined(a, "log");
  std::vector<double> out(a.numel());
  const auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(in[i]);
  Tensor y = make_output(a.shape(), std::move(out), {&a});
  if (y.requires_grad()) {
    record("log", y, [ai = impl(a)](std::span<const double> g) {
      std::vector<double> ga(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] / ai->data[i];
      accumulate(ai, ga);
    });
  }
  return y;
}

Tensor sum(const Tensor& a) {
  require_defined(a, "sum");
  const auto in = a.data();
  const double total = std::accumulate(in.begin(), in.end(), 0.0);
  Tensor y = make_output({1}, {total}, {&a});
  if (y.requires_grad()) {
    record("sum", y, [ai = impl(a)](std::span<const double> g) {
      accumulate(ai, std::vector<double>(ai->data.size(), g[0]));
    });
  }
  return y;
}

Tensor softmax_last(const Tensor& x) {
  require_defined(x, "softmax_last");
  const auto& ks = kernels::active();
  const std::size_t n = last_extent(x);
  const std::size_t rows = x.numel() / n;
  const double* in = x.data().data();
  std::vector<double> out(x.numel(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in + r * n;
    for (std::size_t j = 0; j < n; ++j)
      if (std::isnan(row[j])) throw NumericError("softmax_last: NaN input");
    const double m = ks.max(row, n);
    if (m <= kMaskedRowThreshold) continue;
    double* dst = out.data() + r * n;
    const double total = ks.exp_shift_sum(row, m, dst, n);
    ks.scale(dst, 1.0 / total, dst, n);
  }
  Tensor y = make_output(x.shape(), std::move(out), {&x});
  if (y.requires_grad()) {
    record("softmax_last", y,
           [xi = impl(x), yi = impl(y), n, rows](std::span<const double> g) {
             std::vector<double> gx(g.size());
             const double* yd = yi->data.data();
             for (std::size_t r = 0; r < rows; ++r) {
               const std::size_t o = r * n;
               const double inner = kernels::dot(g.data() + o, yd + o, n);
               for (std::size_t j = 0; j < n; ++j)
                 gx[o + j] = yd[o + j] * (g[o + j] - inner);
             }
             accumulate(xi, gx);
           });
  }
  return y;
}

Tensor log_softmax_last(const Tensor& x) {
  require_defined(x, "log_softmax_last");
  const auto& ks = kernels::active();
  const std::size_t n = last_extent(x);
  const std::size_t rows = x.numel() / n;
  const double* in = x.data().data();
  std::vector<double> out(x.numel());
  std::vector<double> scratch(n);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in + r * n;
    for (std::size_t j = 0; j < n; ++j)
      if (std::isnan(row[j])) throw NumericError("log_softmax_last: NaN input");
    const double m = ks.max(row, n);
    const double lse = m + std::log(ks.exp_shift_sum(row, m, scratch.data(), n));
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = row[j] - lse;
  }
  Tensor y = make_output(x.shape(), std::move(out), {&x});
  if (y.requires_grad()) {
    record("log_softmax_last", y,
           [xi = impl(x), yi = impl(y), n, rows](std::span<const double> g) {
             std::vector<double> gx(g.size());
             for (std::size_t r = 0; r < rows; ++r) {
               const std::size_t o = r * n;
               double gsum = 0.0;
               for (std::size_t j = 0; j < n; ++j) gsum += g[o + j];
               for (std::size_t j = 0; j < n; ++j)
                 gx[o + j] = g[o + j] - std::exp(yi->data[o + j]) * gsum;
             }
             accumulate(xi, gx);
           });
  }
  return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  require_defined(x, "layer_norm");
  const std::size_t n = last_extent(x);
  if (gain.numel() != n || bias.numel() != n)
    throw ShapeError("layer_norm: gain/bias must have " + std::to_string(n) +
                     " entries");
  const std::size_t rows = x.numel() / n;
  const auto in = x.data();
  const auto gd = gain.data();
  const auto bd = bias.data();
  std::vector<double> out(x.numel());
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t o = r * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += in[o + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (in[o + j] - mean) * (in[o + j] - mean);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[o + j] = (in[o + j] - mean) * inv_std[r];
      out[o + j] = xhat[o + j] * gd[j] + bd[j];
    }
  }
  Tensor y = make_output(x.shape(), std::move(out), {&x, &gain, &bias});
  if (y.requires_grad()) {
    record("layer_norm", y,
           [xi = impl(x), gi = impl(gain), bi = impl(bias), xhat = std::move(xhat),
            inv_std = std::move(inv_std), n, rows](std::span<const double> g) {
             std::vector<double> gg(n, 0.0), gb(n, 0.0), gx(g.size());
             for (std::size_t r = 0; r < rows; ++r) {
               const std::size_t o = r * n;
               double sum_d = 0.0, sum_dx = 0.0;
               for (std::size_t j = 0; j < n; ++j) {
                 gg[j] += g[o + j] * xhat[o + j];
                 gb[j] += g[o + j];
                 const double d = g[o + j] * gi->data[j];
                 sum_d += d;
                 sum_dx += d * xhat[o + j];
               }
               const double inv_n = 1.0 / static_cast<double>(n);
               for (std::size_t j = 0; j < n; ++j) {
                 const double d = g[o + j] * gi->data[j];
                 gx[o + j] = inv_std[r] * (d - inv_n * sum_d - xhat[o + j] * inv_n * sum_dx);
               }
             }
             accumulate(xi, gx);
             accumulate(gi, gg);
             accumulate(bi, gb);
           });
  }
  return y;
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  require_defined(table, "embedding");
  if (table.rank() != 2) throw ShapeError("embedding table must be rank 2");
  if (ids.empty()) throw ShapeError("embedding: empty id list");
  const std::size_t vocab = table.dim(0);
  const std::size_t width = table.dim(1);
  std::vector<double> out(ids.size() * width);
  const auto td = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab)
      throw ShapeError("embedding: token id " + std::to_string(ids[i]) +
                       " outside vocabulary of " + std::to_string(vocab));
    std::copy_n(td.data() + static_cast<std::size_t>(ids[i]) * width, width,
                out.data() + i * width);
  }
  Tensor y = make_output({ids.size(), width}, std::move(out), {&table});
  if (y.requires_grad()) {
    record("embedding", y,
           [ti = impl(table), ids = std::vector<int>(ids.begin(), ids.end()),
            width](std::span<const double> g) {
             if (!ti->requires_grad) return;
             auto& gt = ti->grad_buffer();
             for (std::size_t i = 0; i < ids.size(); ++i)
               kernels::axpy(1.0, g.data() + i * width,
                             gt.data() + static_cast<std::size_t>(ids[i]) * width, width);
           });
  }
  return y;
}

Tensor gather_columns(const Tensor& table, std::span<const int> index,
                      const Shape& out_shape) {
  require_defined(table, "gather_columns");
  if (table.rank() != 2) throw ShapeError("gather_columns: table must be rank 2");
  if (shape_numel(out_shape) != index.size())
    throw ShapeError("gather_columns: index count does not match output shape");
  const std::size_t rows = table.dim(0);
  const std::size_t cols = table.dim(1);
  for (int c : index)
    if (c >= static_cast<int>(cols))
      throw ShapeError("gather_columns: column " + std::to_string(c) + " out of range");
  const auto td = table.data();
  const std::size_t n = index.size();
  std::vector<double> out(rows * n, 0.0);
  for (std::size_t h = 0; h < rows; ++h)
    for (std::size_t i = 0; i < n; ++i)
      if (index[i] >= 0) out[h * n + i] = td[h * cols + static_cast<std::size_t>(index[i])];
  Shape shape{rows};
  shape.insert(shape.end(), out_shape.begin(), out_shape.end());
  Tensor y = make_output(std::move(shape), std::move(out), {&table});
  if (y.requires_grad()) {
    record("gather_columns", y,
           [ti = impl(table), idx = std::vector<int>(index.begin(), index.end()),
            rows, cols](std::span<const double> g) {
             if (!ti->requires_grad) return;
             auto& gt = ti->grad_buffer();
             const std::size_t n = idx.size();
             for (std::size_t h = 0; h < rows; ++h)
               for (std::size_t i = 0; i < n; ++i)
                 if (idx[i] >= 0) gt[h * cols + static_cast<std::size_t>(idx[i])] += g[h * n + i];
           });
  }
  return y;
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range");
  Shape shape = first;
  shape[axis] = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != first[i])
        throw ShapeError("concat: extent mismatch on axis " + std::to_string(i) +
                         ": " + shape_string(s) + " vs " + shape_string(first));
    shape[axis] += s[axis];
  }
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
  const std::size_t out_row = shape[axis] * inner;

  std::vector<double> out(shape_numel(shape));
  std::vector<std::size_t> widths;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const std::size_t w = p.shape()[axis] * inner;
    const double* src = p.data().data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(src + o * w, w, out.data() + o * out_row + offset);
    widths.push_back(w);
    offset += w;
  }
  Tensor y = make_output(std::move(shape), std::move(out), parts);
  if (y.requires_grad()) {
    std::vector<detail::ImplPtr> inputs;
    for (const Tensor& p : parts) inputs.push_back(impl(p));
    record("concat", y,
           [inputs = std::move(inputs), widths = std::move(widths), outer,
            out_row](std::span<const double> g) {
             std::size_t off = 0;
             for (std::size_t k = 0; k < inputs.size(); ++k) {
               const std::size_t w = widths[k];
               if (inputs[k]->requires_grad) {
                 auto& gi = inputs[k]->grad_buffer();
                 for (std::size_t o = 0; o < outer; ++o)
                   kernels::axpy(1.0, g.data() + o * out_row + off, gi.data() + o * w, w);
               }
               off += w;
             }
           });
  }
  return y;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start,
             std::size_t length) {
  require_defined(x, "slice");
  const Shape& s = x.shape();
  if (axis >= s.size()) throw ShapeError("slice: axis out of range");
  if (length == 0 || start + length > s[axis])
    throw ShapeError("slice [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") out of range for axis " +
                     std::to_string(axis) + " of " + shape_string(s));
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t src_row = s[axis] * inner;
  const std::size_t w = length * inner;
  const std::size_t off = start * inner;
  Shape shape = s;
  shape[axis] = length;
  std::vector<double> out(outer * w);
  const double* src = x.data().data();
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(src + o * src_row + off, w, out.data() + o * w);
  Tensor y = make_output(std::move(shape), std::move(out), {&x});
  if (y.requires_grad()) {
    record("slice", y,
           [xi = impl(x), outer, src_row, w, off](std::span<const double> g) {
             if (!xi->requires_grad) return;
             auto& gx = xi->grad_buffer();
             for (std::size_t o = 0; o < outer; ++o)
               kernels::axpy(1.0, g.data() + o * w, gx.data() + o * src_row + off, w);
           });
  }
  return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
  require_defined(x, "reshape");
  if (shape_numel(shape) != x.numel())
    throw ShapeError("reshape " + shape_string(x.shape()) + " -> " +
                     shape_string(shape) + " changes element count");
  Tensor y = make_output(std::move(shape),
                         std::vector<double>(x.data().begin(), x.data().end()), {&x});
  if (y.requires_grad()) {
    record("reshape", y, [xi = impl(x)](std::span<const double> g) {
      accumulate(xi, g);
    });
  }
  return y;
}

Tensor permute(const Tensor& x, std::span<const std::size_t> order) {
  require_defined(x, "permute");
  Shape shape = detail::permuted_shape(x.shape(), order);
  Tensor y = make_output(shape, detail::permute_values(x.data(), x.shape(), order),
                         {&x});
  if (y.requires_grad()) {
    std::vector<std::size_t> inverse(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) inverse[order[i]] = i;
    record("permute", y,
           [xi = impl(x), shape = std::move(shape),
            inverse = std::move(inverse)](std::span<const double> g) {
             accumulate(xi, detail::permute_values(g, shape, inverse));
           });
  }
  return y;
}

Tensor nll_gather(const Tensor& log_probs, std::span<const int> targets) {
  require_defined(log_probs, "nll_gather");
  if (log_probs.rank() != 2 || log_probs.dim(0) != targets.size())
    throw ShapeError("nll_gather: expected [" + std::to_string(targets.size()) +
                     ", V] log-probabilities, got " + shape_string(log_probs.shape()));
  const std::size_t vocab = log_probs.dim(1);
  const auto lp = log_probs.data();
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= vocab)
      throw ShapeError("nll_gather: target " + std::to_string(targets[i]) +
                       " outside vocabulary");
    total -= lp[i * vocab + static_cast<std::size_t>(targets[i])];
  }
  Tensor y = make_output({1}, {total}, {&log_probs});
  if (y.requires_grad()) {
    record("nll_gather", y,
           [li = impl(log_probs), t = std::vector<int>(targets.begin(), targets.end()),
            vocab](std::span<const double> g) {
             if (!li->requires_grad) return;
             auto& gl = li->grad_buffer();
             for (std::size_t i = 0; i < t.size(); ++i)
               gl[i * vocab + static_cast<std::size_t>(t[i])] -= g[0];
           });
  }
  return y;
}

Tensor dropout(const Tensor& x, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw Error("dropout rate must be in [0, 1)");
  if (rate == 0.0) return x;
  std::vector<double> keep(x.numel());
  const double kept = 1.0 / (1.0 - rate);
  for (double& v : keep) v = rng.uniform() < rate ? 0.0 : kept;
  return mul(x, Tensor::from(x.shape(), std::move(keep)));
}

}  // namespace saicl
