// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedgraph/data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "fedgraph/errors.hpp"
#include "fedgraph/metrics.hpp"
#include "fedgraph/training.hpp"
#include "support/oracles.hpp"

namespace fedgraph {
namespace {

double correlation(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    sab += (a[t] - ma) * (b[t] - mb);
    saa += (a[t] - ma) * (a[t] - ma);
    sbb += (b[t] - mb) * (b[t] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// ---- synthetic generator ---------------------------------------------------

TEST(Synthetic, NoMissingAtRateZero) {
  SyntheticConfig cfg;
  cfg.n_steps = 500;
  const TrafficDataset ds = generate_synthetic(make_ring(6), cfg);
  EXPECT_EQ(ds.n_nodes(), 6u);
  EXPECT_EQ(ds.n_steps(), 500u);
  EXPECT_EQ(ds.count_missing(), 0u);
}

TEST(Synthetic, MissingRateIsRespected) {
  SyntheticConfig cfg;
  cfg.n_steps = 2000;
  cfg.missing_rate = 0.1;
  const TrafficDataset ds = generate_synthetic(make_ring(10), cfg);
  const double rate = static_cast<double>(ds.count_missing()) / (10.0 * 2000.0);
  EXPECT_NEAR(rate, 0.1, 0.01);
}

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticConfig cfg;
  cfg.n_steps = 300;
  cfg.missing_rate = 0.05;
  const SensorGraph g = make_ring(5);
  const TrafficDataset a = generate_synthetic(g, cfg);
  const TrafficDataset b = generate_synthetic(g, cfg);
  cfg.seed = 1;
  const TrafficDataset c = generate_synthetic(g, cfg);
  bool differs = false;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t t = 0; t < 300; ++t) {
      ASSERT_EQ(a.observed(i, t), b.observed(i, t));
      if (a.observed(i, t)) {
        ASSERT_EQ(a.value(i, t), b.value(i, t));
      }
      if (a.observed(i, t) && c.observed(i, t) && a.value(i, t) != c.value(i, t)) differs = true;
    }
  }
  EXPECT_TRUE(differs);
}

TEST(Synthetic, NeighboursCorrelateMoreThanDistantNodes) {
  SyntheticConfig cfg;
  cfg.n_steps = 4000;
  const std::size_t n = 20;
  const TrafficDataset ds = generate_synthetic(make_ring(n), cfg);
  double near = 0, far = 0;
  for (std::size_t i = 0; i < n; ++i) {
    near += correlation(ds.series(i), ds.series((i + 1) % n));
    far += correlation(ds.series(i), ds.series((i + n / 2) % n));
  }
  EXPECT_GT(near / n, far / n + 0.05);
}

// ---- series files -------------------------------------------------------------

TEST(LoadDataset, EmptyFieldIsMissing) {
  const TrafficDataset ds = parse_dataset("# nodes=3 interval_min=5\nt,node_0,node_1,node_2\n0,60.0,,59.0\n");
  EXPECT_EQ(ds.n_steps(), 1u);
  EXPECT_TRUE(ds.observed(0, 0));
  EXPECT_FALSE(ds.observed(1, 0));
  EXPECT_TRUE(ds.observed(2, 0));
  EXPECT_EQ(ds.value(0, 0), 60.0);
  EXPECT_EQ(ds.value(2, 0), 59.0);
  EXPECT_TRUE(std::isnan(ds.value(1, 0)));
  EXPECT_EQ(ds.count_missing(), 1u);
}

TEST(LoadDataset, ParseErrorsCarryLineNumbers) {
  auto line_of = [](const char* text) -> std::size_t {
    try {
      parse_dataset(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of(""), 1u);
  EXPECT_EQ(line_of("t,node_0\n0,1\n"), 1u);
  EXPECT_EQ(line_of("# nodes=2\nt,node_0\n"), 2u);
  EXPECT_EQ(line_of("# nodes=2\nt,node_0,node_x\n"), 2u);
  EXPECT_EQ(line_of("# nodes=2\nt,node_0,node_1\n0,1,2\n1,1\n"), 4u);
  EXPECT_EQ(line_of("# nodes=2\nt,node_0,node_1\n0,1,2\n2,1,2\n"), 4u);
  EXPECT_EQ(line_of("# nodes=1\nt,node_0\n0,abc\n"), 3u);
  EXPECT_EQ(line_of("# nodes=1\nt,node_0\n0,inf\n"), 3u);
}

TEST(LoadDataset, FileRoundTripIsExact) {
  SyntheticConfig cfg;
  cfg.n_steps = 200;
  cfg.missing_rate = 0.2;
  const TrafficDataset ds = generate_synthetic(make_ring(4), cfg);
  const auto path = std::filesystem::temp_directory_path() / "fedgraph_series_rt.csv";
  write_dataset(path, ds);
  const TrafficDataset back = load_dataset(path, 5.0);
  std::filesystem::remove(path);
  ASSERT_EQ(back.n_nodes(), 4u);
  ASSERT_EQ(back.n_steps(), 200u);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t t = 0; t < 200; ++t) {
      ASSERT_EQ(back.observed(i, t), ds.observed(i, t));
      if (ds.observed(i, t)) {
        ASSERT_EQ(back.value(i, t), ds.value(i, t));
      }
    }
}

TEST(LoadDataset, IntervalMismatchIsRejected) {
  const auto path = std::filesystem::temp_directory_path() / "fedgraph_series_iv.csv";
  write_dataset(path, TrafficDataset(1, 2, {1.0, 2.0}, {1, 1}, 5.0));
  EXPECT_THROW(load_dataset(path, 15.0), ValidationError);
  std::filesystem::remove(path);
}

// ---- splits -------------------------------------------------------------------

TEST(Split, HundredStepsGivesSeventyTenTwenty) {
  const auto r = split_ranges(100, {});
  EXPECT_EQ(r[0], (StepRange{0, 70}));
  EXPECT_EQ(r[1], (StepRange{70, 80}));
  EXPECT_EQ(r[2], (StepRange{80, 100}));
}

TEST(Split, RejectsBadFractions) {
  EXPECT_THROW(split_ranges(100, {0.7, 0.2, 0.2}), ConfigError);
  EXPECT_THROW(split_ranges(100, {0.0, 0.5, 0.5}), ConfigError);
}

TEST(Split, RangesAreDisjointOrderedAndCover) {
  for (std::size_t n = 30; n < 400; n += 7) {
    const auto r = split_ranges(n, {0.6, 0.15, 0.25});
    EXPECT_EQ(r[0].begin, 0u);
    EXPECT_EQ(r[0].end, r[1].begin);
    EXPECT_EQ(r[1].end, r[2].begin);
    EXPECT_EQ(r[2].end, n);
  }
}

TEST(Split, TooShortRangesAreConfigErrors) {
  SyntheticConfig cfg;
  cfg.n_steps = 100;
  const TrafficDataset ds = generate_synthetic(make_ring(3), cfg);
  EXPECT_THROW(chronological_split(ds, {}, 24), ConfigError);  // val has 10 steps
  EXPECT_NO_THROW(chronological_split(ds, {}, 10));
}

TEST(Split, WindowCountConventionReproducesPublishedCounts) {
  // 34272 steps, windows of 24: 23974 / 3425 / 6850 sequences.
  std::vector<double> v(34272);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = static_cast<double>(t % 97);
  const TrafficDataset varied(1, 34272, v, std::vector<std::uint8_t>(34272, 1));
  const SplitPlan p = chronological_split(varied, {}, 24, SplitConvention::WindowCount);
  EXPECT_EQ(window_count(p.train.size(), 24), 23974u);
  EXPECT_EQ(window_count(p.val.size(), 24), 3425u);
  EXPECT_EQ(window_count(p.test.size(), 24), 6850u);
  EXPECT_EQ(p.test.end, 34272u);
}

TEST(Split, TestWindowsNeverTouchEarlierSteps) {
  SyntheticConfig cfg;
  cfg.n_steps = 600;
  const TrafficDataset ds = generate_synthetic(make_ring(3), cfg);
  const SplitPlan p = chronological_split(ds, {}, 24);
  const WindowedSplit train = make_windows(ds, p.train, p.stats);
  const WindowedSplit test = make_windows(ds, p.test, p.stats);
  for (const WindowRef& w : train.windows()) EXPECT_LE(w.start + 24, p.train.end);
  for (const WindowRef& w : test.windows()) EXPECT_GE(w.start, p.test.begin);
}

// ---- normalization ----------------------------------------------------------------

TEST(NormStats, MatchesTwoPassOracleOverObservedTrainEntries) {
  SyntheticConfig cfg;
  cfg.n_steps = 1000;
  cfg.missing_rate = 0.15;
  const TrafficDataset ds = generate_synthetic(make_ring(7), cfg);
  const StepRange train{0, 700};
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t t = train.begin; t < train.end; ++t)
      if (ds.observed(i, t)) {
        sum += ds.value(i, t);
        ++n;
      }
  const double mean = sum / static_cast<double>(n);
  double ss = 0;
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t t = train.begin; t < train.end; ++t)
      if (ds.observed(i, t)) ss += (ds.value(i, t) - mean) * (ds.value(i, t) - mean);
  const NormStats s = compute_norm_stats(ds, train);
  EXPECT_NEAR(s.mean, mean, 1e-9);
  EXPECT_NEAR(s.std, std::sqrt(ss / static_cast<double>(n)), 1e-9);
}

TEST(NormStats, DegenerateInputsThrow) {
  const TrafficDataset constant(1, 4, {5, 5, 5, 5}, {1, 1, 1, 1});
  EXPECT_THROW(compute_norm_stats(constant, {0, 4}), ValidationError);
  const TrafficDataset hidden(1, 4, {1, 2, NAN, NAN}, {1, 1, 0, 0});
  EXPECT_THROW(compute_norm_stats(hidden, {2, 4}), ValidationError);
}

TEST(NormStats, DenormalizeInvertsNormalize) {
  const NormStats s{57.3, 9.1};
  Rng rng(2);
  for (int k = 0; k < 100; ++k) {
    const double v = rng.uniform(-100, 200);
    EXPECT_NEAR(s.denormalize(s.normalize(v)), v, 1e-12);
  }
}

// ---- windows ------------------------------------------------------------------------

TEST(WindowCount, Examples) {
  EXPECT_EQ(window_count(24, 24), 1u);
  EXPECT_EQ(window_count(25, 24), 2u);
  EXPECT_EQ(window_count(23, 24), 0u);
  EXPECT_THROW(window_count(30, 24, 0), ConfigError);
}

TEST(WindowCount, MatchesEnumeration) {
  Rng rng(50);
  for (int k = 0; k < 50; ++k) {
    const std::size_t len = rng.below(200);
    const std::size_t window = 1 + rng.below(40);
    const std::size_t stride = 1 + rng.below(5);
    std::size_t count = 0;
    for (std::size_t s = 0; s + window <= len; s += stride) ++count;
    EXPECT_EQ(window_count(len, window, stride), count) << len << " " << window << " " << stride;
  }
}

TEST(Windows, PerNodeCountsAndInputImputation) {
  // One node; steps 1 and 2 are missing.
  const TrafficDataset ds(1, 6, {10, NAN, NAN, 40, 50, 60}, {1, 0, 0, 1, 1, 1});
  const NormStats stats{10.0, 10.0};
  const WindowedSplit w = make_windows(ds, {0, 6}, stats, 3, 1);
  ASSERT_EQ(w.size(), 3u);
  std::vector<double> in(3), tv(1), tm(1);
  w.input(0, in);  // steps 0,1,2 -> 0, carried, carried
  EXPECT_EQ(in, (std::vector<double>{0.0, 0.0, 0.0}));
  w.target(0, tv, tm);  // step 3
  EXPECT_EQ(tv[0], 3.0);
  EXPECT_EQ(tm[0], 1.0);
  w.input(1, in);  // steps 1,2,3 -> leading gaps use the train mean (0)
  EXPECT_EQ(in, (std::vector<double>{0.0, 0.0, 3.0}));

  const TrafficDataset gap(1, 4, {10, 20, 30, NAN}, {1, 1, 1, 0});
  const WindowedSplit g = make_windows(gap, {0, 4}, stats, 3, 1);
  g.target(0, tv, tm);
  EXPECT_EQ(tv[0], 0.0);
  EXPECT_EQ(tm[0], 0.0);
}

TEST(Windows, ForNodeAndBatchShapes) {
  SyntheticConfig cfg;
  cfg.n_steps = 100;
  const TrafficDataset ds = generate_synthetic(make_ring(3), cfg);
  const WindowedSplit all = make_windows(ds, {0, 100}, compute_norm_stats(ds, {0, 100}), 12, 12, 2);
  EXPECT_EQ(all.size(), 3 * window_count(100, 24, 2));
  const WindowedSplit one = all.for_node(1);
  EXPECT_EQ(one.size(), window_count(100, 24, 2));
  for (const auto& w : one.windows()) EXPECT_EQ(w.node, 1u);
  const std::vector<std::size_t> idx{0, 5, 7};
  const Batch b = make_batch(one, idx);
  EXPECT_EQ(b.inputs.size(), 12u);
  EXPECT_EQ(b.targets.size(), 12u);
  EXPECT_EQ(b.inputs[0].cols(), 3);
  EXPECT_EQ(b.refs[1], one.windows()[5]);
}

// ---- poisoning: unobserved raw values never reach any output ------------------------

TEST(Poisoning, MaskedValuesDoNotAffectStatsLossOrMetrics) {
  SyntheticConfig cfg;
  cfg.n_steps = 300;
  cfg.missing_rate = 0.2;
  const TrafficDataset clean = generate_synthetic(make_ring(4), cfg);
  TrafficDataset poisoned = clean;
  auto raw = poisoned.raw_values();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t t = 0; t < 300; ++t)
      if (!poisoned.observed(i, t)) raw[i * 300 + t] = 1e9;

  const SplitPlan a = chronological_split(clean, {}, 24);
  const SplitPlan b = chronological_split(poisoned, {}, 24);
  EXPECT_EQ(a.stats.mean, b.stats.mean);
  EXPECT_EQ(a.stats.std, b.stats.std);

  const GruArch arch{1, 6, 1, 12, 12};
  const GruSeq2Seq model = testing::random_model(arch, 4, 0.3);
  const WindowedSplit ta = make_windows(clean, a.test, a.stats);
  const WindowedSplit tb = make_windows(poisoned, b.test, b.stats);
  EXPECT_EQ(evaluate_mse(model, ta), evaluate_mse(model, tb));
  MetricAccumulator ma, mb;
  accumulate_metrics(model, ta, ma);
  accumulate_metrics(model, tb, mb);
  const MetricReport ra = ma.report(), rb = mb.report();
  EXPECT_EQ(ra.mae, rb.mae);
  EXPECT_EQ(ra.rmse, rb.rmse);
  EXPECT_EQ(ra.mape, rb.mape);
  EXPECT_EQ(ra.n_evaluated, rb.n_evaluated);
}

}  // namespace
}  // namespace fedgraph
