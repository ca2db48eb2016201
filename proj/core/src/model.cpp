// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedgraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fedgraph/errors.hpp"
#include "fedgraph/rng.hpp"

namespace fedgraph {

namespace {

GruLayer zero_layer(int input_dim, int hidden_dim) {
  GruLayer layer;
  layer.w = RowMatrix::Zero(3 * hidden_dim, input_dim);
  layer.u = RowMatrix::Zero(3 * hidden_dim, hidden_dim);
  layer.b = Eigen::VectorXd::Zero(3 * hidden_dim);
  return layer;
}

template <typename Model, typename Span>
std::vector<Span> blocks_of(Model& model) {
  std::vector<Span> out;
  auto add = [&](auto& m) { out.emplace_back(m.data(), static_cast<std::size_t>(m.size())); };
  for (auto* stack : {&model.encoder, &model.decoder}) {
    for (auto& layer : *stack) {
      add(layer.w);
      add(layer.u);
      add(layer.b);
    }
  }
  add(model.proj_w);
  add(model.proj_b);
  return out;
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

}  // namespace

void GruArch::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || num_layers < 1 || input_len < 1 ||
      output_len < 1) {
    throw ConfigError("GRU architecture dimensions must all be >= 1");
  }
}

GruSeq2Seq GruSeq2Seq::zeros(const GruArch& arch) {
  arch.validate();
  GruSeq2Seq model;
  model.arch = arch;
  for (auto* stack : {&model.encoder, &model.decoder}) {
    for (int l = 0; l < arch.num_layers; ++l) {
      stack->push_back(zero_layer(l == 0 ? arch.input_dim : arch.hidden_dim,
                                  arch.hidden_dim));
    }
  }
  model.proj_w = RowMatrix::Zero(arch.input_dim, arch.hidden_dim);
  model.proj_b = Eigen::VectorXd::Zero(arch.input_dim);
  return model;
}

std::size_t GruSeq2Seq::num_params() const {
  std::size_t total = 0;
  for (auto block : parameter_blocks(*this)) total += block.size();
  return total;
}

std::vector<std::span<double>> parameter_blocks(GruSeq2Seq& model) {
  return blocks_of<GruSeq2Seq, std::span<double>>(model);
}

std::vector<std::span<const double>> parameter_blocks(const GruSeq2Seq& model) {
  return blocks_of<const GruSeq2Seq, std::span<const double>>(model);
}

std::vector<TensorView> named_tensors(const GruSeq2Seq& model) {
  static constexpr const char* kGates[] = {"update", "reset", "candidate"};
  std::vector<TensorView> out;
  auto add_layer = [&](const std::string& prefix, const GruLayer& layer) {
    const auto h = static_cast<std::size_t>(layer.u.cols());
    const auto in = static_cast<std::size_t>(layer.w.cols());
    for (std::size_t g = 0; g < 3; ++g) {
      out.push_back({prefix + ".w_" + kGates[g], {h, in},
                     {layer.w.data() + g * h * in, h * in}});
    }
    for (std::size_t g = 0; g < 3; ++g) {
      out.push_back({prefix + ".u_" + kGates[g], {h, h},
                     {layer.u.data() + g * h * h, h * h}});
    }
    for (std::size_t g = 0; g < 3; ++g) {
      out.push_back({prefix + ".b_" + kGates[g], {h}, {layer.b.data() + g * h, h}});
    }
  };
  for (std::size_t l = 0; l < model.encoder.size(); ++l)
    add_layer("encoder." + std::to_string(l), model.encoder[l]);
  for (std::size_t l = 0; l < model.decoder.size(); ++l)
    add_layer("decoder." + std::to_string(l), model.decoder[l]);
  const auto d = static_cast<std::size_t>(model.proj_w.rows());
  const auto h = static_cast<std::size_t>(model.proj_w.cols());
  out.push_back({"projection.weight", {d, h}, {model.proj_w.data(), d * h}});
  out.push_back({"projection.bias", {d}, {model.proj_b.data(), d}});
  return out;
}

bool identical(const GruSeq2Seq& a, const GruSeq2Seq& b) {
  if (!(a.arch == b.arch)) return false;
  const auto ba = parameter_blocks(a);
  const auto bb = parameter_blocks(b);
  if (ba.size() != bb.size()) return false;
  for (std::size_t k = 0; k < ba.size(); ++k) {
    if (ba[k].size() != bb[k].size()) return false;
    if (std::memcmp(ba[k].data(), bb[k].data(), ba[k].size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

bool all_finite(const GruSeq2Seq& model) {
  for (auto block : parameter_blocks(model))
    for (double v : block)
      if (!std::isfinite(v)) return false;
  return true;
}

GruSeq2Seq init_params(const GruArch& arch, std::uint64_t seed) {
  GruSeq2Seq model = GruSeq2Seq::zeros(arch);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(arch.hidden_dim));
  auto fill = [&](auto& m) {
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-bound, bound);
  };
  for (auto* stack : {&model.encoder, &model.decoder}) {
    for (auto& layer : *stack) {
      fill(layer.w);
      fill(layer.u);
    }
  }
  fill(model.proj_w);
  return model;
}

GruStep gru_step(const GruLayer& layer, const Eigen::MatrixXd& x,
                 const Eigen::MatrixXd& h_prev) {
  const Eigen::Index h = layer.u.cols();
  if (x.rows() != layer.w.cols() || h_prev.rows() != h || x.cols() != h_prev.cols()) {
    throw ShapeError("gru_step: input or hidden state does not match layer shape");
  }
  GruStep s;
  s.x = x;
  s.h_prev = h_prev;

  Eigen::MatrixXd pre = layer.w * x;
  pre.colwise() += layer.b;
  pre.topRows(2 * h).noalias() += layer.u.topRows(2 * h) * h_prev;
  s.update = sigmoid(pre.topRows(h));
  s.reset = sigmoid(pre.middleRows(h, h));

  const Eigen::MatrixXd gated = s.reset.cwiseProduct(h_prev);
  Eigen::MatrixXd cand_pre = pre.bottomRows(h);
  cand_pre.noalias() += layer.u.bottomRows(h) * gated;
  s.candidate = cand_pre.array().tanh().matrix();

  s.hidden = ((1.0 - s.update.array()) * h_prev.array() +
              s.update.array() * s.candidate.array())
                 .matrix();
  return s;
}

Eigen::VectorXd gru_cell(const GruLayer& layer, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& h_prev) {
  return gru_step(layer, x, h_prev).hidden.col(0);
}

namespace {

void check_input(const GruSeq2Seq& model, const Sequence& x) {
  const auto& arch = model.arch;
  if (static_cast<int>(x.size()) != arch.input_len) {
    throw ShapeError("expected an input sequence of " + std::to_string(arch.input_len) +
                     " steps, got " + std::to_string(x.size()));
  }
  for (const auto& step : x) {
    if (step.rows() != arch.input_dim || step.cols() != x.front().cols()) {
      throw ShapeError("input step has wrong shape");
    }
  }
}

// Runs the model; when `tape` is non-null every step is recorded.
Sequence run_forward(const GruSeq2Seq& model, const Sequence& x, Tape* tape) {
  check_input(model, x);
  const auto& arch = model.arch;
  const Eigen::Index batch = x.front().cols();
  const auto layers = static_cast<std::size_t>(arch.num_layers);

  if (tape) {
    tape->arch = arch;
    tape->batch = batch;
    tape->encoder.assign(layers, {});
    tape->decoder.assign(layers, {});
    for (auto& v : tape->encoder) v.reserve(static_cast<std::size_t>(arch.input_len));
    for (auto& v : tape->decoder) v.reserve(static_cast<std::size_t>(arch.output_len));
  }

  std::vector<Eigen::MatrixXd> h(layers, Eigen::MatrixXd::Zero(arch.hidden_dim, batch));
  for (const auto& step_input : x) {
    const Eigen::MatrixXd* in = &step_input;
    for (std::size_t l = 0; l < layers; ++l) {
      GruStep s = gru_step(model.encoder[l], *in, h[l]);
      h[l] = s.hidden;
      if (tape) {
        tape->encoder[l].push_back(std::move(s));
        in = &tape->encoder[l].back().hidden;
      } else {
        in = &h[l];
      }
    }
  }

  Sequence y_hat;
  y_hat.reserve(static_cast<std::size_t>(arch.output_len));
  Eigen::MatrixXd feed = x.back();
  for (int k = 0; k < arch.output_len; ++k) {
    const Eigen::MatrixXd* in = &feed;
    for (std::size_t l = 0; l < layers; ++l) {
      GruStep s = gru_step(model.decoder[l], *in, h[l]);
      h[l] = s.hidden;
      if (tape) {
        tape->decoder[l].push_back(std::move(s));
        in = &tape->decoder[l].back().hidden;
      } else {
        in = &h[l];
      }
    }
    Eigen::MatrixXd y = model.proj_w * h.back();
    y.colwise() += model.proj_b;
    feed = y;
    y_hat.push_back(std::move(y));
  }
  return y_hat;
}

void check_same_shape(const Sequence& a, const Sequence& b, const char* what) {
  if (a.size() != b.size()) throw ShapeError(std::string(what) + ": step count mismatch");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].rows() != b[k].rows() || a[k].cols() != b[k].cols())
      throw ShapeError(std::string(what) + ": step shape mismatch");
  }
}

// Backward through one GRU step. Accumulates parameter gradients into `g`,
// writes dL/dh_prev, and dL/dx when requested.
void step_backward(const GruLayer& p, const GruStep& s, const Eigen::MatrixXd& dh,
                   GruLayer& g, Eigen::MatrixXd& dh_prev, Eigen::MatrixXd* dx) {
  const Eigen::Index h = p.u.cols();
  const auto z = s.update.array();
  const auto r = s.reset.array();
  const auto c = s.candidate.array();
  const auto hp = s.h_prev.array();
  const auto d = dh.array();

  Eigen::MatrixXd da(3 * h, dh.cols());
  da.topRows(h) = (d * (c - hp) * z * (1.0 - z)).matrix();
  da.bottomRows(h) = (d * z * (1.0 - c * c)).matrix();

  const Eigen::MatrixXd gated = (r * hp).matrix();
  g.u.bottomRows(h).noalias() += da.bottomRows(h) * gated.transpose();
  const Eigen::MatrixXd d_gated = p.u.bottomRows(h).transpose() * da.bottomRows(h);
  da.middleRows(h, h) = (d_gated.array() * hp * r * (1.0 - r)).matrix();

  dh_prev = (d * (1.0 - z) + d_gated.array() * r).matrix();
  dh_prev.noalias() += p.u.topRows(2 * h).transpose() * da.topRows(2 * h);
  g.u.topRows(2 * h).noalias() += da.topRows(2 * h) * s.h_prev.transpose();

  g.w.noalias() += da * s.x.transpose();
  g.b += da.rowwise().sum();
  if (dx) dx->noalias() = p.w.transpose() * da;
}

}  // namespace

ForwardResult forward(const GruSeq2Seq& model, const Sequence& x) {
  ForwardResult out;
  out.y_hat = run_forward(model, x, &out.tape);
  return out;
}

Sequence predict(const GruSeq2Seq& model, const Sequence& x) {
  return run_forward(model, x, nullptr);
}

LossValue mse_loss(const Sequence& y_hat, const Sequence& y, const Sequence& mask) {
  check_same_shape(y_hat, y, "mse_loss");
  check_same_shape(y_hat, mask, "mse_loss");
  LossValue out;
  double sum = 0.0;
  for (std::size_t k = 0; k < y_hat.size(); ++k) {
    const Eigen::Index n = y_hat[k].size();
    const double* a = y_hat[k].data();
    const double* b = y[k].data();
    const double* m = mask[k].data();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (m[i] != 0.0) {
        const double e = a[i] - b[i];
        sum += e * e;
        ++out.n_observed;
      }
    }
  }
  if (out.n_observed > 0) out.value = sum / static_cast<double>(out.n_observed);
  return out;
}

Sequence mse_loss_grad(const Sequence& y_hat, const Sequence& y, const Sequence& mask) {
  check_same_shape(y_hat, y, "mse_loss_grad");
  check_same_shape(y_hat, mask, "mse_loss_grad");
  std::size_t count = 0;
  for (const auto& m : mask) count += static_cast<std::size_t>((m.array() != 0.0).count());
  Sequence grad;
  grad.reserve(y_hat.size());
  const double scale = count > 0 ? 2.0 / static_cast<double>(count) : 0.0;
  for (std::size_t k = 0; k < y_hat.size(); ++k) {
    grad.push_back(((mask[k].array() != 0.0)
                        .select(scale * (y_hat[k] - y[k]).array(), 0.0))
                       .matrix());
  }
  return grad;
}

Grads backward(const GruSeq2Seq& model, const Tape& tape, const Sequence& dy_hat) {
  const auto& arch = model.arch;
  if (!(tape.arch == arch)) throw InternalError("tape was recorded for another architecture");
  const auto layers = static_cast<std::size_t>(arch.num_layers);
  if (tape.encoder.size() != layers || tape.decoder.size() != layers ||
      static_cast<int>(dy_hat.size()) != arch.output_len) {
    throw InternalError("tape does not match model");
  }
  const Eigen::Index batch = tape.batch;
  const int out_len = arch.output_len;

  Grads g = GruSeq2Seq::zeros(arch);
  std::vector<Eigen::MatrixXd> carry(layers, Eigen::MatrixXd::Zero(arch.hidden_dim, batch));
  Eigen::MatrixXd dfeed = Eigen::MatrixXd::Zero(arch.input_dim, batch);
  Eigen::MatrixXd dh_prev;
  Eigen::MatrixXd dx;

  for (int k = out_len - 1; k >= 0; --k) {
    const auto step = static_cast<std::size_t>(k);
    // y_k feeds the loss and, for k < T-1, the decoder input at k+1.
    Eigen::MatrixXd dy = dy_hat[step];
    if (k < out_len - 1) dy += dfeed;
    const Eigen::MatrixXd& top = tape.decoder.back()[step].hidden;
    g.proj_w.noalias() += dy * top.transpose();
    g.proj_b += dy.rowwise().sum();

    Eigen::MatrixXd dh = carry.back();
    dh.noalias() += model.proj_w.transpose() * dy;
    for (std::size_t l = layers; l-- > 0;) {
      if (l + 1 < layers) dh = carry[l] + dx;
      const bool want_dx = l > 0 || k > 0;
      step_backward(model.decoder[l], tape.decoder[l][step], dh, g.decoder[l], dh_prev,
                    want_dx ? &dx : nullptr);
      carry[l] = dh_prev;
    }
    if (k > 0) dfeed = dx;
  }

  for (int t = arch.input_len - 1; t >= 0; --t) {
    const auto step = static_cast<std::size_t>(t);
    for (std::size_t l = layers; l-- > 0;) {
      Eigen::MatrixXd dh = carry[l];
      if (l + 1 < layers) dh += dx;
      step_backward(model.encoder[l], tape.encoder[l][step], dh, g.encoder[l], dh_prev,
                    l > 0 ? &dx : nullptr);
      carry[l] = dh_prev;
    }
  }
  return g;
}

AdamState AdamState::for_model(const GruSeq2Seq& model, AdamConfig config) {
  AdamState s;
  s.m = GruSeq2Seq::zeros(model.arch);
  s.v = GruSeq2Seq::zeros(model.arch);
  s.config = config;
  return s;
}

void adam_step(GruSeq2Seq& model, const Grads& grads, AdamState& state) {
  if (!(grads.arch == model.arch) || !(state.m.arch == model.arch)) {
    throw ShapeError("adam_step: gradient or optimizer state shape mismatch");
  }
  const auto params = parameter_blocks(model);
  const auto g = parameter_blocks(grads);
  for (auto block : g) {
    for (double v : block) {
      if (!std::isfinite(v)) throw DivergedError("non-finite gradient");
    }
  }
  const auto m = parameter_blocks(state.m);
  const auto v = parameter_blocks(state.v);
  const auto& cfg = state.config;

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    double* p = params[k].data();
    const double* gk = g[k].data();
    double* mk = m[k].data();
    double* vk = v[k].data();
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      mk[i] = cfg.beta1 * mk[i] + (1.0 - cfg.beta1) * gk[i];
      vk[i] = cfg.beta2 * vk[i] + (1.0 - cfg.beta2) * gk[i] * gk[i];
      const double m_hat = mk[i] / bc1;
      const double v_hat = vk[i] / bc2;
      p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

double global_norm(const Grads& grads) {
  double sum = 0.0;
  for (auto block : parameter_blocks(grads))
    for (double v : block) sum += v * v;
  return std::sqrt(sum);
}

void clip_global_norm(Grads& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto block : parameter_blocks(grads))
      for (double& v : block) v *= scale;
  }
}

}  // namespace fedgraph
