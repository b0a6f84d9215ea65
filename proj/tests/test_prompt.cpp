// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "saicl/error.hpp"
#include "saicl/prompt.hpp"

namespace saicl {
namespace {

TaskExample demo(std::size_t x_len, int fill = 5, Tokens y = {3}) {
  return {Tokens(x_len, fill), std::move(y), "t", {}};
}

ModelConfig tiny(AttentionVariant v, std::uint64_t seed = 1) {
  ModelConfig c;
  c.vocab = 16;
  c.d_model = 8;
  c.heads = 2;
  c.encoder_layers = 2;
  c.decoder_layers = 1;
  c.d_ff = 8;
  c.variant = v;
  c.init_std = 0.5;
  c.seed = seed;
  return c;
}

std::vector<TaskExample> random_demos(std::size_t k, Rng& rng) {
  std::vector<TaskExample> d;
  for (std::size_t i = 0; i < k; ++i) {
    TaskExample e;
    e.x.resize(1 + rng.below(3));
    for (int& t : e.x) t = 6 + static_cast<int>(rng.below(10));
    e.y = {2 + static_cast<int>(rng.below(4))};
    d.push_back(e);
  }
  return d;
}

const CandidateSet kLabels{{{2}, {3}, {4}, {5}}};

TEST(Pack, BudgetAdmitsTen) {
  const std::vector<TaskExample> demos(16, demo(99));
  const PromptPack p = pack_prompt(demos, Tokens(10, 7), 16, 256, PromptFormat::direct);
  EXPECT_EQ(p.provenance.size(), 10u);
  EXPECT_EQ(p.layout.demos(), 10u);
  EXPECT_EQ(p.layout.segment_length(), 100u);
}

TEST(Pack, SlackAdmitsAll) {
  const std::vector<TaskExample> demos(4, demo(1));
  const PromptPack p = pack_prompt(demos, Tokens{7}, 4, 256, PromptFormat::direct);
  EXPECT_EQ(p.provenance, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(p.tokens, (Tokens{5, 3, 5, 3, 5, 3, 5, 3, 7, 0}));
  const auto counts = p.layout.valid_counts();
  EXPECT_EQ(std::vector<std::size_t>(counts.begin(), counts.end()), (std::vector<std::size_t>{2, 2, 2, 2, 1}));
}

TEST(Pack, TruncatesLongSamples) {
  const std::vector<TaskExample> demos{demo(299)};
  const PromptPack p = pack_prompt(demos, Tokens(300, 7), 8, 256, PromptFormat::direct);
  EXPECT_EQ(p.layout.segment_length(), 256u);
  EXPECT_EQ(p.layout.valid_count(0), 256u);
  EXPECT_EQ(p.layout.valid_count(1), 256u);
}

TEST(Pack, Errors) {
  const std::vector<TaskExample> demos{demo(2)};
  EXPECT_THROW(pack_prompt(demos, Tokens(65, 7), 1, 256, PromptFormat::direct), Error);
  EXPECT_THROW(pack_prompt({}, Tokens{7}, 1, 256, PromptFormat::direct), Error);
  EXPECT_THROW(pack_prompt(demos, Tokens{7}, 0, 256, PromptFormat::direct), Error);
  EXPECT_THROW(pack_prompt(demos, Tokens{7}, 1, 0, PromptFormat::direct), Error);
}

TEST(Pack, ChannelOrdersLabelFirst) {
  const std::vector<TaskExample> demos{{{8, 9}, {3}, "t", {}}};
  const PromptPack d = pack_prompt(demos, Tokens{10}, 1, 256, PromptFormat::direct);
  const PromptPack c = pack_prompt(demos, Tokens{4}, 1, 256, PromptFormat::channel);
  EXPECT_EQ(d.tokens, (Tokens{8, 9, 3, 10, 0, 0}));
  EXPECT_EQ(c.tokens, (Tokens{3, 8, 9, 4, 0, 0}));
  EXPECT_EQ(c.format, PromptFormat::channel);
}

TEST(Pack, PropertyBothConstraintsHold) {
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 1 + rng.below(20);
    const std::size_t l_max = 1 + rng.below(300);
    std::vector<TaskExample> demos;
    const std::size_t n = 1 + rng.below(30);
    const std::size_t typical = 1 + rng.below(200);
    for (std::size_t i = 0; i < n; ++i) demos.push_back(demo(1 + rng.below(2 * typical)));
    const Tokens test(1 + rng.below(std::min<std::size_t>(64, 2 * typical)), 7);
    const PromptPack p = pack_prompt(demos, test, k, l_max, PromptFormat::direct);
    std::size_t total = 0;
    for (std::size_t c : p.layout.valid_counts()) {
      EXPECT_LE(c, l_max);
      total += c;
    }
    EXPECT_LE(p.provenance.size(), k);
    EXPECT_LE(total, 64 * k);
    for (std::size_t i = 0; i < p.provenance.size(); ++i) EXPECT_EQ(p.provenance[i], i);
    // Stopping was forced by one of the two constraints.
    if (p.provenance.size() < std::min(k, demos.size())) {
      const std::size_t next = std::min(l_max, demos[p.provenance.size()].x.size() + 1);
      EXPECT_GT(total + next, 64 * k);
    }
    EXPECT_EQ(p.tokens.size(), p.layout.total_length());
    const auto back = admitted_demos(p, demos);
    ASSERT_EQ(back.size(), p.provenance.size());
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i], demos[i]);
  }
}

TEST(Plan, GroupsAreContiguousAndBalanced) {
  const FusionPlan p = FusionPlan::make(FusionScheme::group_fid, 7, 3);
  EXPECT_EQ(p.groups, (std::vector<std::vector<std::size_t>>{{0, 1, 2}, {3, 4}, {5, 6}}));
  EXPECT_EQ(FusionPlan::make(FusionScheme::fid, 4, 1).group_count(), 4u);
  EXPECT_EQ(FusionPlan::make(FusionScheme::single, 4, 1).group_count(), 1u);
  EXPECT_THROW(FusionPlan::make(FusionScheme::single, 4, 2), Error);
  EXPECT_THROW(FusionPlan::make(FusionScheme::ensemble, 4, 5), Error);
  EXPECT_THROW(FusionPlan::make(FusionScheme::ensemble, 4, 0), Error);
  for (std::size_t k = 1; k < 20; ++k)
    for (std::size_t g = 1; g <= k; ++g) {
      const FusionPlan q = FusionPlan::make(FusionScheme::ensemble, k, g);
      std::size_t lo = k, hi = 0, next = 0;
      for (const auto& grp : q.groups) {
        lo = std::min(lo, grp.size());
        hi = std::max(hi, grp.size());
        for (std::size_t i : grp) EXPECT_EQ(i, next++);
      }
      EXPECT_EQ(next, k);
      EXPECT_LE(hi - lo, 1u);
    }
  EXPECT_EQ(parse_scheme("group-fid"), FusionScheme::group_fid);
  EXPECT_THROW(parse_scheme("x"), Error);
}

TEST(Fid, OneDemoMatchesSingleFullPrompt) {
  Rng rng(3);
  const Model m(tiny(AttentionVariant::saicl));
  for (int t = 0; t < 5; ++t) {
    const auto demos = random_demos(1, rng);
    const Tokens x{7, 8};
    const EncoderOutput f = fid_encode(m, demos, x);
    const EncoderOutput s = m.encode(pack_prompt(demos, x, 1, 256, PromptFormat::direct), AttentionVariant::full);
    EXPECT_EQ(oracle::max_abs_diff(f.states.data(), s.states.data()), 0.0);
    const Tokens y{1, 3};
    EXPECT_EQ(oracle::max_abs_diff(m.decoder_logits(f, y).data(), m.decoder_logits(s, y).data()), 0.0);
  }
}

TEST(Fid, IdenticalDemosGiveIdenticalBlocks) {
  const Model m(tiny(AttentionVariant::full));
  const std::vector<TaskExample> demos(2, TaskExample{{7, 9}, {3}, "t", {}});
  const EncoderOutput f = fid_encode(m, demos, Tokens{8});
  const std::size_t half = f.states.numel() / 2;
  EXPECT_EQ(oracle::max_abs_diff(f.states.data().first(half), f.states.data().subspan(half)), 0.0);
}

TEST(Fid, BlocksMatchIndependentEncodes) {
  Rng rng(4);
  const Model m(tiny(AttentionVariant::saicl));
  const auto demos = random_demos(3, rng);
  const Tokens x{9};
  const EncoderOutput f = fid_encode(m, demos, x);
  std::size_t off = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const EncoderOutput e = m.encode(pack_prompt(std::span(demos).subspan(i, 1), x, 1, 256, PromptFormat::direct),
                                     AttentionVariant::full);
    EXPECT_EQ(oracle::max_abs_diff(f.states.data().subspan(off, e.states.numel()), e.states.data()), 0.0);
    off += e.states.numel();
  }
  EXPECT_EQ(off, f.states.numel());
}

TEST(GroupFid, AllSingletonGroupsEqualFid) {
  Rng rng(5);
  const Model m(tiny(AttentionVariant::full));
  for (std::size_t k : {1u, 3u, 6u}) {
    const auto demos = random_demos(k, rng);
    const EncoderOutput g = group_fid(m, demos, Tokens{7}, k);
    const EncoderOutput f = fid_encode(m, demos, Tokens{7});
    EXPECT_LE(oracle::max_abs_diff(g.states.data(), f.states.data()), 1e-12);
    EXPECT_EQ(g.key_valid, f.key_valid);
  }
}

TEST(GroupFid, OneGroupEqualsSinglePrompt) {
  Rng rng(6);
  for (auto v : {AttentionVariant::saicl, AttentionVariant::full}) {
    const Model m(tiny(v));
    const auto demos = random_demos(5, rng);
    const EncoderOutput g = group_fid(m, demos, Tokens{7, 8}, 1);
    const EncoderOutput s = m.encode(pack_prompt(demos, Tokens{7, 8}, 5, 256, PromptFormat::direct));
    EXPECT_EQ(oracle::max_abs_diff(g.states.data(), s.states.data()), 0.0);
  }
}

TEST(GroupFid, TwoGroupsMatchIndependentEncodes) {
  Rng rng(7);
  const Model m(tiny(AttentionVariant::saicl));
  const auto demos = random_demos(4, rng);
  const EncoderOutput g = group_fid(m, demos, Tokens{7}, 2);
  const std::span<const TaskExample> all(demos);
  const EncoderOutput a = m.encode(pack_prompt(all.subspan(0, 2), Tokens{7}, 2, 256, PromptFormat::direct));
  const EncoderOutput b = m.encode(pack_prompt(all.subspan(2, 2), Tokens{7}, 2, 256, PromptFormat::direct));
  ASSERT_EQ(g.states.numel(), a.states.numel() + b.states.numel());
  EXPECT_EQ(oracle::max_abs_diff(g.states.data().first(a.states.numel()), a.states.data()), 0.0);
  EXPECT_EQ(oracle::max_abs_diff(g.states.data().subspan(a.states.numel()), b.states.data()), 0.0);
  EXPECT_THROW(group_fid(m, demos, Tokens{7}, 5), Error);
}

TEST(Ensemble, OneGroupEqualsSingle) {
  Rng rng(8);
  for (auto format : {PromptFormat::direct, PromptFormat::channel}) {
    const Model m(tiny(AttentionVariant::saicl, 3));
    for (int t = 0; t < 5; ++t) {
      const auto demos = random_demos(4, rng);
      const Tokens x{6, 7};
      const auto e = fused_scores(m, demos, x, kLabels, FusionScheme::ensemble, 1, {format});
      const auto s = fused_scores(m, demos, x, kLabels, FusionScheme::single, 1, {format});
      EXPECT_EQ(e, s);
      EXPECT_EQ(ensemble_predict(m, demos, x, kLabels, 1, {format}),
                fused_predict(m, demos, x, kLabels, FusionScheme::single, 1, {format}));
    }
  }
}

TEST(Ensemble, IdenticalGroupsAverageToOneGroup) {
  const Model m(tiny(AttentionVariant::saicl, 4));
  const TaskExample d{{7, 8}, {4}, "t", {}};
  const std::vector<TaskExample> four(4, d), two(2, d);
  const auto avg = fused_scores(m, four, Tokens{9}, kLabels, FusionScheme::ensemble, 2);
  const auto one = fused_scores(m, two, Tokens{9}, kLabels, FusionScheme::single, 1);
  EXPECT_LE(oracle::max_abs_diff(avg, one), 1e-12);
}

TEST(Ensemble, MatchesHandAveragedGroups) {
  Rng rng(9);
  NoGradGuard guard;
  const Model m(tiny(AttentionVariant::saicl, 5));
  for (int t = 0; t < 5; ++t) {
    const auto demos = random_demos(4, rng);
    const Tokens x{10};
    const std::span<const TaskExample> all(demos);
    const auto a = score_candidates(m, m.encode(pack_prompt(all.first(2), x, 2, 256, PromptFormat::direct)), kLabels);
    const auto b = score_candidates(m, m.encode(pack_prompt(all.subspan(2), x, 2, 256, PromptFormat::direct)), kLabels);
    std::vector<double> mean(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mean[i] = (a[i] + b[i]) / 2.0;
    EXPECT_EQ(fused_scores(m, demos, x, kLabels, FusionScheme::ensemble, 2), mean);
    EXPECT_EQ(ensemble_predict(m, demos, x, kLabels, 2), argmax_first(mean));
  }
}

TEST(Ensemble, InvariantToOrderWithinGroupForSaicl) {
  Rng rng(10);
  const Model m(tiny(AttentionVariant::saicl, 6));
  for (int t = 0; t < 5; ++t) {
    auto demos = random_demos(6, rng);
    const auto before = fused_scores(m, demos, Tokens{8}, kLabels, FusionScheme::ensemble, 2);
    std::swap(demos[0], demos[2]);
    std::swap(demos[3], demos[4]);
    const auto after = fused_scores(m, demos, Tokens{8}, kLabels, FusionScheme::ensemble, 2);
    EXPECT_LE(oracle::max_abs_diff(before, after), 1e-9);
  }
}

TEST(Channel, ScoresTestInputUnderEachCandidatePrompt) {
  Rng rng(11);
  const Model m(tiny(AttentionVariant::saicl, 7));
  const auto demos = random_demos(3, rng);
  const Tokens x{8, 9};
  const auto s = fused_scores(m, demos, x, kLabels, FusionScheme::single, 1, {PromptFormat::channel});
  for (std::size_t c = 0; c < kLabels.size(); ++c) {
    NoGradGuard g;
    const PromptPack p = pack_prompt(demos, kLabels.options[c], 3, 256, PromptFormat::channel);
    EXPECT_EQ(s[c], m.sequence_logprob(m.encode(p), x).item());
  }
}

TEST(Schemes, AllRunInBothFormats) {
  Rng rng(12);
  const Model m(tiny(AttentionVariant::saicl, 8));
  const auto demos = random_demos(4, rng);
  GradTape::current().clear();
  for (auto format : {PromptFormat::direct, PromptFormat::channel})
    for (auto scheme : {FusionScheme::single, FusionScheme::fid, FusionScheme::group_fid, FusionScheme::ensemble}) {
      const std::size_t g = scheme == FusionScheme::single ? 1 : 2;
      const auto s = fused_scores(m, demos, Tokens{7}, kLabels, scheme, g, {format});
      EXPECT_EQ(s.size(), 4u);
      for (double v : s) EXPECT_LT(v, 0.0);
    }
  EXPECT_TRUE(GradTape::current().empty());
}

}  // namespace
}  // namespace saicl
