// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include "saicl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>

#include "saicl/error.hpp"
#include "saicl/rng.hpp"

namespace saicl {
namespace {

Tensor fake(std::size_t h, std::size_t t, std::size_t d, Rng& rng) {
  std::vector<double> v(h * t * d);
  for (double& x : v) x = rng.normal() * 0.5;
  return Tensor::from({h, t, d}, std::move(v));
}

BenchRecord time_one(const BenchSpec& spec, AttentionVariant variant, std::size_t k, std::size_t L,
                     Rng& rng) {
  BenchRecord r{variant, k, L};
  const ScoreStorage storage = score_storage(k, L);
  r.score_storage = variant == AttentionVariant::full ? storage.full : storage.saicl;
  if (spec.heads * r.score_storage * sizeof(double) > spec.memory_ceiling_bytes) {
    r.oom = true;
    return r;
  }
  const SegmentLayout layout = SegmentLayout::uniform(k, L);
  const std::size_t T = layout.total_length();
  const Tensor q = fake(spec.heads, T, spec.head_dim, rng);
  const Tensor kk = fake(spec.heads, T, spec.head_dim, rng);
  const Tensor v = fake(spec.heads, T, spec.head_dim, rng);
  std::optional<AttentionMask> mask;
  if (variant == AttentionVariant::full) mask = build_full_mask(layout);

  NoGradGuard no_grad;
  auto once = [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const Tensor out = variant == AttentionVariant::full ? full_attention(q, kk, v, *mask, Tensor())
                                                         : saicl_attention(q, kk, v, layout, nullptr);
    const auto t1 = std::chrono::steady_clock::now();
    if (out.numel() == 0) throw Error("empty attention output");
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
  };
  for (std::size_t i = 0; i < spec.warmup; ++i) once();
  std::vector<double> times;
  for (std::size_t i = 0; i < spec.repetitions; ++i) times.push_back(once());
  for (double t : times) r.mean_ms += t / static_cast<double>(times.size());
  double ss = 0.0;
  for (double t : times) ss += (t - r.mean_ms) * (t - r.mean_ms);
  r.std_ms = std::sqrt(ss / static_cast<double>(times.size() - 1));
  r.median_ms = median(times);
  return r;
}

}  // namespace

void BenchSpec::validate() const {
  if (ks.empty() || lengths.empty() || variants.empty()) throw Error("bench spec: empty grid");
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] <= ks[i - 1]) throw Error("bench spec: k grid must be strictly increasing");
  for (std::size_t L : lengths)
    if (L < 1) throw Error("bench spec: L must be >= 1");
  if (repetitions < 3) throw Error("bench spec: repetitions must be >= 3");
  if (heads < 1 || head_dim < 1) throw Error("bench spec: heads and head_dim must be >= 1");
}

double median(std::vector<double> v) {
  if (v.empty()) throw Error("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("loglog_slope needs two or more points");
  double mx = 0, my = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw Error("loglog_slope needs positive values");
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0) throw Error("loglog_slope needs distinct x values");
  return sxy / sxx;
}

void write_bench_header(std::ostream& out) {
  out << "variant,k,L,mean_ms,median_ms,std_ms,score_storage\n";
}

void write_bench_row(std::ostream& out, const BenchRecord& r) {
  out << variant_name(r.variant) << ',' << r.k << ',' << r.L << ',';
  if (r.oom) {
    out << "OOM,OOM,OOM";
  } else {
    out << std::fixed << std::setprecision(4) << r.mean_ms << ',' << r.median_ms << ',' << r.std_ms;
    out << std::defaultfloat;
  }
  out << ',' << r.score_storage << '\n';
}

std::vector<BenchRecord> run_bench(const BenchSpec& spec, std::ostream* csv) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<BenchRecord> out;
  if (csv) write_bench_header(*csv);
  for (AttentionVariant variant : spec.variants)
    for (std::size_t L : spec.lengths)
      for (std::size_t k : spec.ks) {
        out.push_back(time_one(spec, variant, k, L, rng));
        if (csv) {
          write_bench_row(*csv, out.back());
          csv->flush();
        }
      }
  return out;
}

}  // namespace saicl
