// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fedgraph {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Shape of the per-client GRU encoder-decoder.
struct GruArch {
  int input_dim = 1;     // D, features per step (also the output width)
  int hidden_dim = 100;  // H
  int num_layers = 2;    // stacked GRU layers in both encoder and decoder
  int input_len = 12;    // m, observed steps
  int output_len = 12;   // T, forecast steps

  // Throws ConfigError when any dimension is < 1.
  void validate() const;

  bool operator==(const GruArch&) const = default;
};

// One GRU layer. Gate blocks are stacked along the rows in the order
// [update; reset; candidate], so each row-major matrix serializes as the
// concatenation of its three per-gate tensors.
struct GruLayer {
  RowMatrix w;        // 3H x input width, input-to-hidden
  RowMatrix u;        // 3H x H, hidden-to-hidden
  Eigen::VectorXd b;  // 3H

  int hidden_dim() const noexcept { return static_cast<int>(u.cols()); }
  int input_dim() const noexcept { return static_cast<int>(w.cols()); }
};

// Parameters of one client model. The same type doubles as the gradient
// container and as the Adam moment accumulators.
struct GruSeq2Seq {
  GruArch arch;
  std::vector<GruLayer> encoder;
  std::vector<GruLayer> decoder;
  RowMatrix proj_w;        // D x H
  Eigen::VectorXd proj_b;  // D

  static GruSeq2Seq zeros(const GruArch& arch);

  std::size_t num_params() const;
};

using Grads = GruSeq2Seq;

// Contiguous storage blocks in canonical order: for each encoder layer then
// each decoder layer {w, u, b}, then proj_w, proj_b.
std::vector<std::span<double>> parameter_blocks(GruSeq2Seq& model);
std::vector<std::span<const double>> parameter_blocks(const GruSeq2Seq& model);

// A named tensor inside a model, viewing its storage.
struct TensorView {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<const double> data;
};

// Every parameter tensor in canonical layout order. Within a layer:
// w_update, w_reset, w_candidate, u_update, u_reset, u_candidate,
// b_update, b_reset, b_candidate.
std::vector<TensorView> named_tensors(const GruSeq2Seq& model);

// Bitwise equality of architecture and all parameters.
bool identical(const GruSeq2Seq& a, const GruSeq2Seq& b);
bool all_finite(const GruSeq2Seq& model);

// Weights ~ U[-1/sqrt(H), 1/sqrt(H)] from Rng(seed), biases zero.
GruSeq2Seq init_params(const GruArch& arch, std::uint64_t seed);

// Activations of one GRU step over a batch (one column per example):
//   z = s(Wz x + Uz h + bz),  r = s(Wr x + Ur h + br)
//   c = tanh(Wc x + Uc (r . h) + bc),  h' = (1 - z) . h + z . c
struct GruStep {
  Eigen::MatrixXd x;
  Eigen::MatrixXd h_prev;
  Eigen::MatrixXd update;
  Eigen::MatrixXd reset;
  Eigen::MatrixXd candidate;
  Eigen::MatrixXd hidden;
};

GruStep gru_step(const GruLayer& layer, const Eigen::MatrixXd& x,
                 const Eigen::MatrixXd& h_prev);

// Single-example convenience wrapper returning h'.
Eigen::VectorXd gru_cell(const GruLayer& layer, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& h_prev);

// A batch of sequences: one D x B matrix per time step.
using Sequence = std::vector<Eigen::MatrixXd>;

// Everything backward() needs from a forward pass.
struct Tape {
  GruArch arch;
  Eigen::Index batch = 0;
  std::vector<std::vector<GruStep>> encoder;  // [layer][step]
  std::vector<std::vector<GruStep>> decoder;  // [layer][step]
};

struct ForwardResult {
  Sequence y_hat;  // T steps of D x B
  Tape tape;
};

// Encoder runs from a zero hidden state; the decoder starts from the
// encoder's final hidden state (per layer), consumes x_m at its first step
// and its own previous prediction afterwards.
ForwardResult forward(const GruSeq2Seq& model, const Sequence& x);

// Same as forward() without keeping the tape.
Sequence predict(const GruSeq2Seq& model, const Sequence& x);

struct LossValue {
  double value = 0.0;
  std::size_t n_observed = 0;
  bool empty_mask() const noexcept { return n_observed == 0; }
};

// Mean squared error over entries whose mask is non-zero. An all-false mask
// yields value 0 and n_observed 0.
LossValue mse_loss(const Sequence& y_hat, const Sequence& y, const Sequence& mask);

// d(mse_loss)/d(y_hat).
Sequence mse_loss_grad(const Sequence& y_hat, const Sequence& y, const Sequence& mask);

// Reverse-mode gradients of a scalar loss given dL/dy_hat, including the
// path through the decoder's fed-back predictions.
Grads backward(const GruSeq2Seq& model, const Tape& tape, const Sequence& dy_hat);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::int64_t step = 0;
  GruSeq2Seq m;
  GruSeq2Seq v;
  AdamConfig config;

  static AdamState for_model(const GruSeq2Seq& model, AdamConfig config = {});
};

// Bias-corrected Adam update in place. Throws DivergedError if any gradient
// is non-finite; model and state are left untouched in that case.
void adam_step(GruSeq2Seq& model, const Grads& grads, AdamState& state);

// Global L2 norm of all gradient entries.
double global_norm(const Grads& grads);
// Scales grads so their global norm is at most max_norm.
void clip_global_norm(Grads& grads, double max_norm);

}  // namespace fedgraph
