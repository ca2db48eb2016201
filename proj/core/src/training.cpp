// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedgraph/training.hpp"

#include <algorithm>
#include <numeric>

#include "fedgraph/errors.hpp"
#include "fedgraph/rng.hpp"

namespace fedgraph {

namespace {

void check_compatible(const GruSeq2Seq& model, const WindowedSplit& split) {
  if (model.arch.input_dim != 1 || model.arch.input_len != split.input_len() ||
      model.arch.output_len != split.output_len()) {
    throw ShapeError("model architecture does not match the split's window shape");
  }
}

}  // namespace

std::vector<double> train_epochs(GruSeq2Seq& model, AdamState& state,
                                 const WindowedSplit& split, const TrainOptions& options,
                                 Rng& rng) {
  if (options.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (options.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<double> epoch_loss;
  if (options.epochs == 0) return epoch_loss;
  if (split.empty()) throw ConfigError("cannot train on an empty split");
  check_compatible(model, split);

  std::vector<std::size_t> order(split.size());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    double sse = 0.0;
    std::size_t observed = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      const Batch batch =
          make_batch(split, std::span<const std::size_t>(order).subspan(begin, end - begin));
      ForwardResult fwd = forward(model, batch.inputs);
      const LossValue loss = mse_loss(fwd.y_hat, batch.targets, batch.masks);
      sse += loss.value * static_cast<double>(loss.n_observed);
      observed += loss.n_observed;
      if (loss.empty_mask()) continue;
      Grads grads = backward(model, fwd.tape, mse_loss_grad(fwd.y_hat, batch.targets, batch.masks));
      if (options.clip_norm) clip_global_norm(grads, *options.clip_norm);
      adam_step(model, grads, state);
    }
    epoch_loss.push_back(observed > 0 ? sse / static_cast<double>(observed) : 0.0);
  }
  return epoch_loss;
}

double evaluate_mse(const GruSeq2Seq& model, const WindowedSplit& split,
                    std::size_t batch_size) {
  check_compatible(model, split);
  std::vector<std::size_t> idx(split.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  double sse = 0.0;
  std::size_t observed = 0;
  for (std::size_t begin = 0; begin < idx.size(); begin += batch_size) {
    const std::size_t end = std::min(idx.size(), begin + batch_size);
    const Batch batch = make_batch(split, std::span<const std::size_t>(idx).subspan(begin, end - begin));
    const LossValue loss = mse_loss(predict(model, batch.inputs), batch.targets, batch.masks);
    sse += loss.value * static_cast<double>(loss.n_observed);
    observed += loss.n_observed;
  }
  return observed > 0 ? sse / static_cast<double>(observed) : 0.0;
}

void accumulate_metrics(const GruSeq2Seq& model, const WindowedSplit& split,
                        MetricAccumulator& total, std::vector<MetricAccumulator>* per_step,
                        std::size_t batch_size) {
  check_compatible(model, split);
  const auto horizon = static_cast<std::size_t>(split.output_len());
  if (per_step && per_step->size() != horizon) per_step->resize(horizon);
  const NormStats& stats = split.stats();
  std::vector<std::size_t> idx(split.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t begin = 0; begin < idx.size(); begin += batch_size) {
    const std::size_t end = std::min(idx.size(), begin + batch_size);
    const Batch batch = make_batch(split, std::span<const std::size_t>(idx).subspan(begin, end - begin));
    const Sequence y_hat = predict(model, batch.inputs);
    for (std::size_t c = 0; c < batch.size(); ++c) {
      const auto col = static_cast<Eigen::Index>(c);
      for (std::size_t s = 0; s < horizon; ++s) {
        if (batch.masks[s](0, col) == 0.0) continue;
        const double pred = stats.denormalize(y_hat[s](0, col));
        const double target = stats.denormalize(batch.targets[s](0, col));
        total.add(pred, target);
        if (per_step) (*per_step)[s].add(pred, target);
      }
    }
  }
}

}  // namespace fedgraph
