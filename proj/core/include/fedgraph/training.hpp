// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fedgraph/data.hpp"
#include "fedgraph/metrics.hpp"
#include "fedgraph/model.hpp"

namespace fedgraph {

class Rng;

struct TrainOptions {
  int epochs = 3;
  std::size_t batch_size = 128;
  std::optional<double> clip_norm;  // global-norm gradient clipping
};

// Minibatch Adam on masked MSE. The window order is reshuffled from `rng`
// at the start of every epoch; the final partial batch is kept. Returns the
// pooled training MSE of each epoch (normalized units).
//
// The caller owns `rng`, so splitting a run into several calls consumes the
// same stream as one long call.
std::vector<double> train_epochs(GruSeq2Seq& model, AdamState& state,
                                 const WindowedSplit& split, const TrainOptions& options,
                                 Rng& rng);

// Masked MSE of the model over a split, normalized units.
double evaluate_mse(const GruSeq2Seq& model, const WindowedSplit& split,
                    std::size_t batch_size = 512);

// Adds the model's predictions on `split` (in original units) to `total`
// and, if given, to one accumulator per forecast step.
void accumulate_metrics(const GruSeq2Seq& model, const WindowedSplit& split,
                        MetricAccumulator& total,
                        std::vector<MetricAccumulator>* per_step = nullptr,
                        std::size_t batch_size = 512);

}  // namespace fedgraph
