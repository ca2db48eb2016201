// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace fedgraph {

// Entries with |target| <= this (original units) are left out of MAPE only.
inline constexpr double kMapeFloor = 1e-6;

struct MetricReport {
  double mae = 0.0;
  double mape = 0.0;  // percent
  double rmse = 0.0;
  std::size_t n_evaluated = 0;  // observed target entries
  std::size_t n_mape = 0;       // of which above the MAPE floor

  // False when no target entry was observed; all metrics are then 0 and
  // meaningless.
  bool defined() const noexcept { return n_evaluated > 0; }
};

// Running sums for masked metrics. Merging accumulators in a fixed order
// gives results independent of how the work was split.
class MetricAccumulator {
 public:
  void add(double pred, double target) {
    const double e = pred - target;
    abs_sum_ += std::abs(e);
    sq_sum_ += e * e;
    ++count_;
    if (std::abs(target) > kMapeFloor) {
      ape_sum_ += std::abs(e / target);
      ++mape_count_;
    }
  }
  void merge(const MetricAccumulator& other);
  MetricReport report() const;

 private:
  double abs_sum_ = 0.0;
  double sq_sum_ = 0.0;
  double ape_sum_ = 0.0;
  std::size_t count_ = 0;
  std::size_t mape_count_ = 0;
};

// MAE, RMSE and MAPE over entries where mask is non-zero, pooled over every
// entry (all horizons together). Spans must have equal length.
MetricReport evaluate(std::span<const double> preds, std::span<const double> targets,
                      std::span<const double> mask);

// Metrics split by forecast step. Inputs are horizon-major:
// index = step * per_step + k.
std::vector<MetricReport> evaluate_by_horizon(std::span<const double> preds,
                                              std::span<const double> targets,
                                              std::span<const double> mask,
                                              std::size_t horizon);

}  // namespace fedgraph
