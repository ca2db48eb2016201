// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedgraph/metrics.hpp"

#include <cmath>

#include "fedgraph/errors.hpp"

namespace fedgraph {

void MetricAccumulator::merge(const MetricAccumulator& other) {
  abs_sum_ += other.abs_sum_;
  sq_sum_ += other.sq_sum_;
  ape_sum_ += other.ape_sum_;
  count_ += other.count_;
  mape_count_ += other.mape_count_;
}

MetricReport MetricAccumulator::report() const {
  MetricReport r;
  r.n_evaluated = count_;
  r.n_mape = mape_count_;
  if (count_ > 0) {
    const double n = static_cast<double>(count_);
    r.mae = abs_sum_ / n;
    r.rmse = std::sqrt(sq_sum_ / n);
  }
  if (mape_count_ > 0) r.mape = 100.0 * ape_sum_ / static_cast<double>(mape_count_);
  return r;
}

MetricReport evaluate(std::span<const double> preds, std::span<const double> targets,
                      std::span<const double> mask) {
  if (preds.size() != targets.size() || preds.size() != mask.size()) {
    throw ShapeError("evaluate: predictions, targets and mask differ in length");
  }
  MetricAccumulator acc;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    if (mask[k] != 0.0) acc.add(preds[k], targets[k]);
  }
  return acc.report();
}

std::vector<MetricReport> evaluate_by_horizon(std::span<const double> preds,
                                              std::span<const double> targets,
                                              std::span<const double> mask,
                                              std::size_t horizon) {
  if (horizon == 0 || preds.size() % horizon != 0) {
    throw ShapeError("evaluate_by_horizon: length is not a multiple of the horizon");
  }
  const std::size_t per_step = preds.size() / horizon;
  std::vector<MetricReport> out;
  out.reserve(horizon);
  for (std::size_t s = 0; s < horizon; ++s) {
    out.push_back(evaluate(preds.subspan(s * per_step, per_step),
                           targets.subspan(s * per_step, per_step),
                           mask.subspan(s * per_step, per_step)));
  }
  return out;
}

}  // namespace fedgraph
