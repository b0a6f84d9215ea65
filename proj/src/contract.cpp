// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

// Two-operand einsum lowered to a batched A * B^T product: both operands are
// permuted to [batch, free, contracted] so every output entry is one dot
// product over contiguous memory.

#include <array>
#include <string>

#include "saicl/error.hpp"
#include "saicl/kernels.hpp"
#include "saicl/ops.hpp"
#include "strided.hpp"
#include "tensor_impl.hpp"

namespace saicl {
namespace {

struct ParsedSpec {
  std::string a, b, out;
};

bool is_axis_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

void check_unique(const std::string& axes, const char* what) {
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (!is_axis_char(axes[i]))
      throw SpecError(std::string("contract: invalid axis character '") + axes[i] +
                      "' in " + what);
    if (axes.find(axes[i], i + 1) != std::string::npos)
      throw SpecError(std::string("contract: axis '") + axes[i] +
                      "' repeated in " + what);
  }
}

ParsedSpec parse(std::string_view spec) {
  const auto arrow = spec.find("->");
  if (arrow == std::string_view::npos)
    throw SpecError("contract: spec '" + std::string(spec) + "' lacks '->'");
  const auto lhs = spec.substr(0, arrow);
  const auto comma = lhs.find(',');
  if (comma == std::string_view::npos || lhs.find(',', comma + 1) != std::string_view::npos)
    throw SpecError("contract: spec '" + std::string(spec) +
                    "' must name exactly two operands");
  ParsedSpec p{std::string(lhs.substr(0, comma)), std::string(lhs.substr(comma + 1)),
               std::string(spec.substr(arrow + 2))};
  if (p.a.empty() || p.b.empty() || p.out.empty())
    throw SpecError("contract: spec '" + std::string(spec) + "' has an empty term");
  check_unique(p.a, "first operand");
  check_unique(p.b, "second operand");
  check_unique(p.out, "output");
  for (char c : p.out)
    if (p.a.find(c) == std::string::npos && p.b.find(c) == std::string::npos)
      throw SpecError(std::string("contract: output axis '") + c +
                      "' does not appear in any operand");
  for (const std::string* term : {&p.a, &p.b}) {
    const std::string& other = term == &p.a ? p.b : p.a;
    for (char c : *term)
      if (p.out.find(c) == std::string::npos && other.find(c) == std::string::npos)
        throw SpecError(std::string("contract: axis '") + c +
                        "' appears in one operand only and not in the output");
  }
  return p;
}

bool is_identity(const std::vector<std::size_t>& order) {
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] != i) return false;
  return true;
}

std::size_t extent_of(char c, const std::string& axes, const Shape& shape) {
  return shape[axes.find(c)];
}

struct Result {
  Shape shape;
  std::vector<double> data;
};

Result contract_values(const ParsedSpec& p, const Shape& as, std::span<const double> a,
                       const Shape& bs, std::span<const double> b) {
  if (as.size() != p.a.size())
    throw SpecError("contract: first operand has rank " + std::to_string(as.size()) +
                    " but spec names " + std::to_string(p.a.size()) + " axes");
  if (bs.size() != p.b.size())
    throw SpecError("contract: second operand has rank " + std::to_string(bs.size()) +
                    " but spec names " + std::to_string(p.b.size()) + " axes");
  for (char c : p.a) {
    const auto pos = p.b.find(c);
    if (pos != std::string::npos && bs[pos] != extent_of(c, p.a, as))
      throw ShapeError(std::string("contract: axis '") + c + "' has extent " +
                       std::to_string(extent_of(c, p.a, as)) + " in first operand but " +
                       std::to_string(bs[pos]) + " in second");
  }

  std::string batch, free_a, free_b, contracted;
  for (char c : p.out) {
    const bool in_a = p.a.find(c) != std::string::npos;
    const bool in_b = p.b.find(c) != std::string::npos;
    if (in_a && in_b) batch += c;
    else if (in_a) free_a += c;
    else free_b += c;
  }
  for (char c : p.a)
    if (p.out.find(c) == std::string::npos) contracted += c;

  auto order_for = [](const std::string& axes, const std::string& wanted) {
    std::vector<std::size_t> order;
    for (char c : wanted) order.push_back(axes.find(c));
    return order;
  };
  auto product = [](const std::string& axes, const std::string& src, const Shape& s) {
    std::size_t n = 1;
    for (char c : axes) n *= extent_of(c, src, s);
    return n;
  };

  // Operands already in [batch, free, contracted] order are used in place.
  std::vector<double> a_buf, b_buf;
  const double* a_ptr = a.data();
  const double* b_ptr = b.data();
  if (const auto order = order_for(p.a, batch + free_a + contracted); !is_identity(order)) {
    a_buf = detail::permute_values(a, as, order);
    a_ptr = a_buf.data();
  }
  if (const auto order = order_for(p.b, batch + free_b + contracted); !is_identity(order)) {
    b_buf = detail::permute_values(b, bs, order);
    b_ptr = b_buf.data();
  }
  const std::size_t nb = product(batch, p.a, as);
  const std::size_t m = product(free_a, p.a, as);
  const std::size_t n = product(free_b, p.b, bs);
  const std::size_t k = product(contracted, p.a, as);

  std::vector<double> tmp(nb * m * n);
  const auto& ks = kernels::active();
  for (std::size_t i = 0; i < nb; ++i)
    ks.gemm_nt(m, n, k, a_ptr + i * m * k, b_ptr + i * n * k,
               tmp.data() + i * m * n);

  const std::string tmp_axes = batch + free_a + free_b;
  Shape tmp_shape;
  for (char c : tmp_axes) {
    const bool in_a = p.a.find(c) != std::string::npos;
    tmp_shape.push_back(in_a ? extent_of(c, p.a, as) : extent_of(c, p.b, bs));
  }
  Result r;
  r.shape = detail::permuted_shape(tmp_shape, order_for(tmp_axes, p.out));
  const auto out_order = order_for(tmp_axes, p.out);
  r.data = is_identity(out_order) ? std::move(tmp)
                                  : detail::permute_values(tmp, tmp_shape, out_order);
  return r;
}

}  // namespace

Tensor contract(std::string_view spec, const Tensor& a, const Tensor& b) {
  if (!a.defined() || !b.defined()) throw Error("contract: undefined tensor");
  const ParsedSpec p = parse(spec);
  Result r = contract_values(p, a.shape(), a.data(), b.shape(), b.data());
  Tensor y = detail::make_output(std::move(r.shape), std::move(r.data), {&a, &b});
  if (y.requires_grad()) {
    detail::record(
        "contract", y,
        [p, ai = detail::impl(a), bi = detail::impl(b),
         out_shape = y.shape()](std::span<const double> g) {
          if (ai->requires_grad) {
            const ParsedSpec ga{p.out, p.b, p.a};
            detail::accumulate(ai, contract_values(ga, out_shape, g, bi->shape, bi->data).data);
          }
          if (bi->requires_grad) {
            const ParsedSpec gb{p.out, p.a, p.b};
            detail::accumulate(bi, contract_values(gb, out_shape, g, ai->shape, ai->data).data);
          }
        });
  }
  return y;
}

}  // namespace saicl
