// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include "saicl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <sstream>

#include "saicl/checkpoint.hpp"
#include "saicl/kernels.hpp"
#include "saicl/ops.hpp"
#include "saicl/prompt.hpp"

namespace saicl {
namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.normal();
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::string fmt(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

SegmentLayout random_layout(Rng& rng, std::size_t max_k, std::size_t max_L) {
  const std::size_t k = rng.below(max_k + 1);
  const std::size_t L = 1 + rng.below(max_L);
  std::vector<std::size_t> counts(k + 1);
  for (auto& c : counts) c = 1 + rng.below(L);
  return SegmentLayout(L, counts);
}

VerifyCheck attention_oracle(std::size_t n, Rng& rng) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const SegmentLayout layout = random_layout(rng, 6, 5);
    const std::size_t H = 1 + rng.below(2), d = 1 + rng.below(4), T = layout.total_length();
    const Tensor q = random_tensor({H, T, d}, rng), k = random_tensor({H, T, d}, rng),
                 v = random_tensor({H, T, d}, rng);
    const RelativeBiasTable table = RelativeBiasTable::create(H, BucketParams{}, rng, 1.0);
    const Tensor fast = saicl_attention(q, k, v, layout, &table);
    const Tensor ref = full_attention(q, k, v, build_saicl_mask(layout), bias_for_layout(table, layout, true));
    worst = std::max(worst, max_diff(fast.data(), ref.data()));
  }
  return {"attention oracle equivalence", worst <= 1e-9,
          std::to_string(n) + " instances, max |diff| " + fmt(worst)};
}

VerifyCheck permutation_invariance(std::size_t n, Rng& rng) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    SegmentLayout layout = random_layout(rng, 6, 4);
    if (layout.demos() < 2) layout = SegmentLayout::uniform(2, layout.segment_length());
    const std::size_t H = 2, d = 3, T = layout.total_length(), kd = layout.demos();
    const Tensor q = random_tensor({H, T, d}, rng), k = random_tensor({H, T, d}, rng),
                 v = random_tensor({H, T, d}, rng);
    const RelativeBiasTable table = RelativeBiasTable::create(H, BucketParams{}, rng, 1.0);
    std::vector<std::size_t> perm(kd);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    const SegmentLayout pl = permute_layout(layout, perm);
    auto p = [&](const Tensor& t) { return permute_segments(layout, t, perm, 1); };
    const Tensor a = saicl_attention(q, k, v, layout, &table);
    const Tensor b = saicl_attention(p(q), p(k), p(v), pl, &table);
    const std::size_t L = layout.segment_length();
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t off = (h * T + kd * L) * d;
      worst = std::max(worst, max_diff(a.data().subspan(off, L * d), b.data().subspan(off, L * d)));
    }
    worst = std::max(worst, max_diff(p(a).data(), b.data()));
  }
  return {"demonstration permutation invariance", worst <= 1e-9,
          std::to_string(n) + " pairs, max |diff| " + fmt(worst)};
}

VerifyCheck mask_counts() {
  bool ok = true;
  std::string bad;
  for (std::size_t k = 0; k <= 8; ++k)
    for (std::size_t L = 1; L <= 6; ++L) {
      const SegmentLayout layout = SegmentLayout::uniform(k, L);
      const ScoreStorage s = score_storage(k, L);
      const std::size_t full = build_full_mask(layout).allowed_count();
      const std::size_t saicl = build_saicl_mask(layout).allowed_count();
      if (full != s.full || saicl != s.saicl || full != (k + 1) * (k + 1) * L * L ||
          saicl != (3 * k + 1) * L * L) {
        ok = false;
        bad = "k=" + std::to_string(k) + " L=" + std::to_string(L);
      }
    }
  return {"score-pair counts", ok, ok ? "k in [0,8], L in [1,6]" : "mismatch at " + bad};
}

VerifyCheck kernel_equivalence(Rng& rng) {
#if defined(SAICL_HAVE_AVX2)
  if (!kernels::supported(kernels::Isa::avx2)) return {"scalar/avx2 kernels", true, "avx2 unavailable, skipped"};
  const auto& s = kernels::scalar_table();
  const auto& a = kernels::avx2_table();
  double worst = 0.0;
  for (std::size_t n = 1; n <= 67; ++n) {
    std::vector<double> x(n), y(n), o1(n), o2(n);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    worst = std::max(worst, std::abs(s.dot(x.data(), y.data(), n) - a.dot(x.data(), y.data(), n)));
    const double s1 = s.exp_shift_sum(x.data(), 0.5, o1.data(), n);
    const double s2 = a.exp_shift_sum(x.data(), 0.5, o2.data(), n);
    worst = std::max({worst, std::abs(s1 - s2) / s1, max_diff(o1, o2)});
    std::vector<double> c1(n * 3), c2(n * 3), b(3 * 5);
    for (auto& v : b) v = rng.normal();
    std::vector<double> m(n * 5);
    for (auto& v : m) v = rng.normal();
    s.gemm_nt(n, 3, 5, m.data(), b.data(), c1.data());
    a.gemm_nt(n, 3, 5, m.data(), b.data(), c2.data());
    worst = std::max(worst, max_diff(c1, c2));
  }
  return {"scalar/avx2 kernels", worst <= 1e-12, "max |diff| " + fmt(worst)};
#else
  (void)rng;
  return {"scalar/avx2 kernels", true, "avx2 not compiled, skipped"};
#endif
}

// Worst relative error over a set of leaves between backward() and central
// differences of f.
double gradient_error(const std::function<Tensor()>& f, std::vector<Tensor> leaves) {
  GradTape::current().clear();
  for (Tensor& t : leaves) t.zero_grad();
  backward(f());
  double worst = 0.0;
  for (Tensor& t : leaves) {
    auto w = t.mutable_data();
    double diff = 0, na = 0, nn = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      NoGradGuard guard;
      w[i] = saved + 1e-5;
      const double fp = f().item();
      w[i] = saved - 1e-5;
      const double fm = f().item();
      w[i] = saved;
      const double num = (fp - fm) / 2e-5;
      const double ana = t.has_grad() ? t.grad()[i] : 0.0;
      diff += (num - ana) * (num - ana);
      na += ana * ana;
      nn += num * num;
    }
    const double denom = std::sqrt(na) + std::sqrt(nn);
    worst = std::max(worst, denom < 1e-12 ? std::sqrt(diff) : std::sqrt(diff) / denom);
  }
  return worst;
}

VerifyCheck gradients(std::size_t n, Rng& rng) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const SegmentLayout layout = random_layout(rng, 3, 3);
    const std::size_t H = 2, d = 2, T = layout.total_length();
    Tensor q = random_tensor({H, T, d}, rng, true), k = random_tensor({H, T, d}, rng, true),
           v = random_tensor({H, T, d}, rng, true), w = random_tensor({H, T, d}, rng);
    RelativeBiasTable table = RelativeBiasTable::create(H, BucketParams{8, 16, true}, rng, 1.0);
    table.weights = Tensor::from(table.weights.shape(),
                                 {table.weights.data().begin(), table.weights.data().end()}, true);
    worst = std::max(worst, gradient_error(
                                [&] { return sum(mul(saicl_attention(q, k, v, layout, &table), w)); },
                                {q, k, v, table.weights}));
    Tensor x = random_tensor({3, 4}, rng, true), g = random_tensor({4}, rng, true),
           b = random_tensor({4}, rng, true), m = random_tensor({4, 5}, rng, true);
    worst = std::max(worst, gradient_error(
                                [&] {
                                  const Tensor h = relu(matmul(layer_norm(x, g, b), m));
                                  return sum(mul(log_softmax_last(h), softmax_last(h)));
                                },
                                {x, g, b, m}));
  }
  ModelConfig c;
  c.vocab = 10;
  c.d_model = 4;
  c.heads = 2;
  c.d_ff = 6;
  c.init_std = 0.5;
  c.seed = rng.below(1000);
  Model model(c);
  const SegmentLayout layout(2, {2, 1, 2});
  const Tokens x{2, 3, 4, 0, 5, 6};
  std::vector<Tensor> params;
  for (const auto& [name, t] : model.parameters()) params.push_back(t);
  worst = std::max(worst, gradient_error(
                              [&] {
                                return scale(model.sequence_logprob(model.encode(x, layout), Tokens{7, 8}), -1.0);
                              },
                              params));
  return {"finite-difference gradients", worst <= 1e-4,
          std::to_string(n) + " op instances + 2-layer model, worst relative error " + fmt(worst)};
}

VerifyCheck fusion_degeneracies(std::size_t n, Rng& rng) {
  ModelConfig c;
  c.vocab = 16;
  c.d_model = 8;
  c.heads = 2;
  c.d_ff = 8;
  c.init_std = 0.3;
  c.variant = AttentionVariant::full;
  double worst = 0.0;
  bool argmax_same = true;
  for (std::size_t i = 0; i < n; ++i) {
    c.seed = rng.below(1u << 20);
    const Model model(c);
    const std::size_t k = 1 + rng.below(5);
    std::vector<TaskExample> demos;
    for (std::size_t j = 0; j < k; ++j)
      demos.push_back({{6 + static_cast<int>(rng.below(10))}, {2 + static_cast<int>(rng.below(4))}, "v", {}});
    const Tokens x{6 + static_cast<int>(rng.below(10))};
    const CandidateSet labels{{{2}, {3}, {4}, {5}}};
    const auto e = fused_scores(model, demos, x, labels, FusionScheme::ensemble, 1);
    const auto s = fused_scores(model, demos, x, labels, FusionScheme::single, 1);
    worst = std::max(worst, max_diff(e, s));
    argmax_same = argmax_same && argmax_first(e) == argmax_first(s);
    NoGradGuard guard;
    const EncoderOutput g = group_fid(model, demos, x, k);
    const EncoderOutput f = fid_encode(model, demos, x);
    worst = std::max(worst, max_diff(model.decoder_logits(g, Tokens{1, 3}).data(),
                                     model.decoder_logits(f, Tokens{1, 3}).data()));
    const std::vector<TaskExample> one(demos.begin(), demos.begin() + 1);
    const EncoderOutput f1 = fid_encode(model, one, x);
    const EncoderOutput s1 = model.encode(pack_prompt(one, x, 1, 256, PromptFormat::direct), AttentionVariant::full);
    worst = std::max(worst, max_diff(model.decoder_logits(f1, Tokens{1}).data(),
                                     model.decoder_logits(s1, Tokens{1}).data()));
  }
  return {"fusion-scheme degeneracies", worst <= 1e-12 && argmax_same,
          std::to_string(n) + " instances, max |logit diff| " + fmt(worst)};
}

VerifyCheck checkpoint_round_trip(Rng& rng) {
  ModelConfig c;
  c.vocab = 12;
  c.d_model = 8;
  c.heads = 2;
  c.d_ff = 8;
  c.seed = rng.below(1000);
  const Model m(c);
  std::stringstream buf;
  save_checkpoint(m, buf);
  const Model r = load_checkpoint(buf);
  bool same = r.config() == m.config() && r.parameters().size() == m.parameters().size();
  for (std::size_t i = 0; same && i < m.parameters().size(); ++i) {
    const auto a = m.parameters()[i].second.data(), b = r.parameters()[i].second.data();
    same = std::equal(a.begin(), a.end(), b.begin(), b.end());
  }
  return {"checkpoint round trip", same, same ? "bit-exact" : "mismatch"};
}

}  // namespace

bool VerifyReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

VerifyReport run_verify(bool quick, std::uint64_t seed, std::ostream* log) {
  Rng rng(seed);
  VerifyReport report;
  auto run = [&](VerifyCheck c) {
    if (log) *log << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << std::endl;
    report.checks.push_back(std::move(c));
  };
  run(attention_oracle(quick ? 25 : 100, rng));
  run(permutation_invariance(quick ? 15 : 50, rng));
  run(mask_counts());
  run(kernel_equivalence(rng));
  run(gradients(quick ? 2 : 10, rng));
  run(fusion_degeneracies(quick ? 3 : 10, rng));
  run(checkpoint_round_trip(rng));
  GradTape::current().clear();
  return report;
}

}  // namespace saicl
