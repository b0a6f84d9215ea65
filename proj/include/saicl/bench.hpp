// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "saicl/attention.hpp"

namespace saicl {

struct BenchSpec {
  std::vector<std::size_t> ks{2, 4, 8, 16, 32, 64, 128};
  std::vector<std::size_t> lengths{64};
  std::vector<AttentionVariant> variants{AttentionVariant::saicl, AttentionVariant::full};
  std::size_t repetitions = 10;
  std::size_t warmup = 2;
  std::size_t heads = 4;
  std::size_t head_dim = 16;
  // Rows whose score buffers (heads * score_storage * 8 bytes) exceed this
  // are reported as OOM instead of run.
  std::size_t memory_ceiling_bytes = std::size_t{1} << 30;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BenchRecord {
  AttentionVariant variant;
  std::size_t k;
  std::size_t L;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double std_ms = 0.0;
  std::size_t score_storage = 0;
  bool oom = false;
};

// Times one encoder attention call on random Q/K/V of shape [H, (k+1)L, d]
// with gradients off. Records come out variant-major, then L, then k.
std::vector<BenchRecord> run_bench(const BenchSpec& spec, std::ostream* csv = nullptr);

// variant,k,L,mean_ms,median_ms,std_ms,score_storage ; OOM rows carry "OOM"
// in the three timing columns.
void write_bench_header(std::ostream& out);
void write_bench_row(std::ostream& out, const BenchRecord& r);

// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> v);

}  // namespace saicl
