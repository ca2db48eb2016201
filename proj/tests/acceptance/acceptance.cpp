// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks. Prints one PASS/FAIL/SKIPPED line per
// criterion and exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include "app/commands.hpp"
#include "fedgraph/aggregation.hpp"
#include "fedgraph/fedsim.hpp"
#include "fedgraph/graph.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/overfit.hpp"

namespace fs = std::filesystem;
using namespace fedgraph;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  enum class Status { Pass, Fail, Skipped } status = Status::Pass;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) {
  return {ok ? Outcome::Status::Pass : Outcome::Status::Fail, std::move(detail)};
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int g_failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {Outcome::Status::Fail, std::string("exception: ") + e.what()};
  }
  const char* tag = o.status == Outcome::Status::Pass   ? "PASS"
                    : o.status == Outcome::Status::Fail ? "FAIL"
                                                        : "SKIPPED";
  if (o.status == Outcome::Status::Fail) ++g_failures;
  std::printf("%-7s %-28s %s\n", tag, name, o.detail.c_str());
  std::fflush(stdout);
}

double max_abs(const testing::Dense& a, const ParamMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t c = 0; c < a[i].size(); ++c) m = std::max(m, std::abs(a[i][c] - b.row(i)[c]));
  return m;
}

// ---- aggregation ----------------------------------------------------------------

Outcome operator_oracle_suite() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + rng.below(12);
    const std::size_t p = 1 + rng.below(7);
    const SensorGraph g = testing::random_graph(n, rng.uniform(), rng, true, true);
    const ParamMatrix x = testing::random_matrix(n, p, rng, 5.0);
    const GraphOperators ops = GraphOperators::from_graph(g);
    const int hops = static_cast<int>(rng.below(5));
    const double alpha = rng.uniform();
    worst = std::max(worst, max_abs(testing::naive_graph_fedavg(g, testing::to_dense(x), hops),
                                    graph_fedavg(x, ops.row, hops)));
    worst = std::max(worst, max_abs(testing::naive_mp_fedavg(g, testing::to_dense(x), alpha, hops),
                                    mp_fedavg(x, ops.sym, alpha, hops)));
  }
  const double secs = seconds_since(t0);
  return pass_if(worst < 1e-10 && secs < 10.0,
                 fmt("200 graphs, max abs err %.3g (< 1e-10), %.2f s (< 10 s)", worst, secs));
}

Outcome analytic_fixtures() {
  const ParamMatrix x = testing::from_dense({{0.0}, {3.0}, {6.0}});
  const ParamMatrix path =
      graph_fedavg(x, build_operator(make_path(3), OperatorKind::RowNormalized), 1);
  const bool path_exact = path.row(0)[0] == 1.5 && path.row(1)[0] == 3.0 && path.row(2)[0] == 4.5;

  Rng rng(3);
  ParamMatrix y = testing::random_matrix(5, 9, rng);
  y.values(0, 0) = -0.0;
  const ParamMatrix same = mp_fedavg(y, build_operator(make_ring(5), OperatorKind::SymNormalized), 0.0, 3);
  const bool identity = std::memcmp(same.values.data(), y.values.data(),
                                    sizeof(double) * static_cast<std::size_t>(y.values.size())) == 0;

  double complete_err = 0.0;
  for (std::size_t n : {2u, 5u, 9u}) {
    const ParamMatrix z = testing::random_matrix(n, 6, rng);
    const ParamMatrix a = graph_fedavg(z, build_operator(make_complete(n), OperatorKind::RowNormalized), 1);
    complete_err = std::max(complete_err, (a.values - fedavg(z).values).cwiseAbs().maxCoeff());
  }
  return pass_if(path_exact && identity && complete_err <= 1e-12,
                 fmt("path [1.5,3,4.5] %s, alpha=0 bitwise %s, complete vs fedavg %.3g (<= 1e-12)",
                     path_exact ? "exact" : "WRONG", identity ? "yes" : "NO", complete_err));
}

// Stationary distribution of the row operator by power iteration on pi P.
Eigen::RowVectorXd stationary(const Eigen::MatrixXd& p) {
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(p.rows(), 1.0 / static_cast<double>(p.rows()));
  for (int it = 0; it < 200000; ++it) {
    const Eigen::RowVectorXd next = pi * p;
    const double delta = (next - pi).cwiseAbs().maxCoeff();
    pi = next;
    if (delta < 1e-16) break;
  }
  return pi / pi.sum();
}

Outcome consensus_convergence() {
  double worst = 0.0, worst_pi = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 4242);
    const std::size_t n = 2 + rng.below(11);
    const SensorGraph g = testing::random_connected_graph(n, 0.25, rng, rng.uniform() < 0.5);
    const ParamMatrix x = testing::random_matrix(n, 4, rng, 3.0);
    const PropagationMatrix row = build_operator(g, OperatorKind::RowNormalized);
    const ParamMatrix out = graph_fedavg(x, row, 1000);
    const Eigen::RowVectorXd pi = stationary(row.values);
    const Eigen::VectorXd d = augmented_degrees(g);
    worst_pi = std::max(worst_pi, (pi - d.transpose() / d.sum()).cwiseAbs().maxCoeff());
    const Eigen::RowVectorXd target = pi * x.values;
    for (Eigen::Index i = 0; i < out.values.rows(); ++i)
      worst = std::max(worst, (out.values.row(i) - target).cwiseAbs().maxCoeff());
  }
  return pass_if(worst < 1e-6 && worst_pi < 1e-9,
                 fmt("20 graphs, L=1000, max dev %.3g (< 1e-6); stationary vs degree weights %.3g",
                     worst, worst_pi));
}

// ---- model -------------------------------------------------------------------------

Outcome gradient_check() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = testing::gradient_check(testing::make_grad_problem(GruArch{1, 8, 2, 4, 4}, seed, 2));
    checked += r.n_checked;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      where = r.worst_tensor;
    }
  }
  const double secs = seconds_since(t0);
  return pass_if(worst < 1e-4 && secs < 60.0,
                 fmt("5 seeds, %zu params, max rel err %.3g (< 1e-4) in %s, %.2f s (< 60 s)", checked,
                     worst, where.c_str(), secs));
}

Outcome overfit() {
  const auto r = testing::overfit_four_sequences(500);
  return pass_if(r.final_mse < 1e-3,
                 fmt("4 sequences, 500 epochs, train MSE %.3g -> %.3g (< 1e-3)", r.initial_mse, r.final_mse));
}

// ---- harness ----------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism(const fs::path& scratch) {
  app::GenerateOptions g;
  g.nodes = 6;
  g.steps = 800;
  g.missing_rate = 0.05;
  g.out_dir = scratch / "determinism";
  const auto gen = app::cmd_generate(g);

  app::AppConfig c = app::load_config(gen.config);
  c.fed.arch.hidden_dim = 8;
  c.fed.rounds = 3;
  c.fed.local_epochs = 1;
  c.fed.aggregator.kind = AggregatorKind::MPFedAvg;

  c.out_dir = g.out_dir / "a";
  const auto a = app::cmd_train(c);
  c.out_dir = g.out_dir / "b";
  const auto b = app::cmd_train(c);
  const bool same_log = slurp(g.out_dir / "a" / "results.jsonl") == slurp(g.out_dir / "b" / "results.jsonl");

  c.fed.workers = 4;
  c.out_dir = g.out_dir / "w4";
  const auto w4 = app::cmd_train(c);
  const MetricReport& x = a.result.final.last.test;
  const MetricReport& y = w4.result.final.last.test;
  const double diff = std::max({std::abs(x.rmse - y.rmse), std::abs(x.mae - y.mae),
                                std::abs(x.mape - y.mape),
                                std::abs(a.result.final.last.val.rmse - w4.result.final.last.val.rmse)});
  (void)b;
  return pass_if(same_log && diff <= 1e-9,
                 fmt("results logs %s; workers 1 vs 4 max metric diff %.3g (<= 1e-9)",
                     same_log ? "identical" : "DIFFER", diff));
}

// ---- experiments ------------------------------------------------------------------

struct Method {
  const char* label;
  RunMode mode;
  AggregatorKind kind;
};

struct Table {
  std::vector<std::vector<double>> rmse;  // [method][seed]
  double seconds = 0.0;                   // excludes the centralized baseline
};

constexpr Method kMethods[] = {
    {"LocalOnly", RunMode::LocalOnly, AggregatorKind::FedAvg},
    {"FedAvg", RunMode::Federated, AggregatorKind::FedAvg},
    {"GraphFedAvg(L=1)", RunMode::Federated, AggregatorKind::GraphFedAvg},
    {"MPFedAvg(a=0.8,L=1)", RunMode::Federated, AggregatorKind::MPFedAvg},
    {"Centralized", RunMode::Centralized, AggregatorKind::FedAvg},
};
constexpr std::size_t kLocal = 0, kFedAvg = 1, kGraph = 2, kMp = 3, kCentral = 4;
constexpr int kSeeds = 5;
constexpr int kHidden = 8;

Table run_desk_benchmark() {
  Table t;
  t.rmse.assign(std::size(kMethods), std::vector<double>(kSeeds));
  const SensorGraph ring = make_ring(20);
  for (int seed = 0; seed < kSeeds; ++seed) {
    SyntheticConfig sc;
    sc.n_steps = 4000;
    sc.seed = static_cast<std::uint64_t>(seed);
    sc.missing_rate = 0.05;
    const TrafficDataset ds = generate_synthetic(ring, sc);
    for (std::size_t m = 0; m < std::size(kMethods); ++m) {
      FedConfig c;
      c.arch.hidden_dim = kHidden;
      c.rounds = 5;
      c.local_epochs = 3;
      c.seed = static_cast<std::uint64_t>(seed);
      c.mode = kMethods[m].mode;
      c.aggregator.kind = kMethods[m].kind;
      c.aggregator.hops = 1;
      c.aggregator.alpha = 0.8;
      const auto t0 = Clock::now();
      const RunResult r = run(c, &ring, ds);
      if (m != kCentral) t.seconds += seconds_since(t0);
      t.rmse[m][static_cast<std::size_t>(seed)] = r.final.last.test.rmse;
    }
    std::fprintf(stderr, "  seed %d:", seed);
    for (std::size_t m = 0; m < std::size(kMethods); ++m)
      std::fprintf(stderr, " %s=%.4f", kMethods[m].label, t.rmse[m][static_cast<std::size_t>(seed)]);
    std::fprintf(stderr, "\n");
  }
  return t;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Outcome table_ordering(const Table& t) {
  const double local = mean(t.rmse[kLocal]), fed = mean(t.rmse[kFedAvg]);
  const double graph = mean(t.rmse[kGraph]), mp = mean(t.rmse[kMp]);
  return pass_if(graph < fed && mp < fed && t.seconds < 15 * 60.0,
                 fmt("mean test RMSE: GraphFedAvg %.4f, MPFedAvg %.4f < FedAvg %.4f; "
                     "FedAvg - LocalOnly = %+.4f (LocalOnly %.4f); %.0f s (< 900 s)",
                     graph, mp, fed, fed - local, local, t.seconds));
}

// Published sequence counts and RMSE for the two public datasets.
struct FullScaleTarget {
  const char* name;
  double fedavg, graph, mp;
};

Outcome full_scale() {
  const char* root = std::getenv("FEDGRAPH_FULL_SCALE_DIR");
  const FullScaleTarget targets[] = {{"pems-bay", 4.432, 3.749, 3.733}, {"metr-la", 12.058, 11.479, 11.489}};
  if (root == nullptr) return {Outcome::Status::Skipped, "set FEDGRAPH_FULL_SCALE_DIR to converted METR-LA/PEMS-BAY data"};
  std::string detail;
  bool ok = true;
  for (const auto& t : targets) {
    const fs::path dir = fs::path(root) / t.name;
    if (!fs::exists(dir / "series.csv") || !fs::exists(dir / "graph.csv"))
      return {Outcome::Status::Skipped, "missing " + (dir / "series.csv").string() + " or graph.csv"};
    const TrafficDataset ds = load_dataset(dir / "series.csv");
    const SensorGraph g = load_graph(dir / "graph.csv");
    for (auto [kind, target] : {std::pair{AggregatorKind::FedAvg, t.fedavg},
                                std::pair{AggregatorKind::GraphFedAvg, t.graph},
                                std::pair{AggregatorKind::MPFedAvg, t.mp}}) {
      FedConfig c;
      c.aggregator.kind = kind;
      c.split_convention = SplitConvention::WindowCount;
      c.workers = 4;
      const double rmse = run(c, &g, ds).final.last.test.rmse;
      const double rel = std::abs(rmse - target) / target;
      ok = ok && rel <= 0.05;
      detail += fmt("%s %s %.3f vs %.3f (%+.1f%%); ", t.name, std::string(to_string(kind)).c_str(), rmse,
                    target, 100.0 * (rmse - target) / target);
    }
  }
  return pass_if(ok, detail);
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "fedgraph_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  report("operator-oracle-suite", operator_oracle_suite);
  report("analytic-fixtures", analytic_fixtures);
  report("consensus-convergence", consensus_convergence);
  report("gradient-check", gradient_check);
  report("overfit-sanity", overfit);
  report("determinism", [&] { return determinism(scratch); });

  std::fprintf(stderr, "desk benchmark: N=20 ring, 4000 steps, hidden %d, %d seeds\n", kHidden, kSeeds);
  Table table;
  bool have_table = false;
  report("desk-scale-ordering", [&] {
    table = run_desk_benchmark();
    have_table = true;
    return table_ordering(table);
  });
  report("full-scale-reproduction", full_scale);

  const int gating_failures = g_failures;

  // Expectations stated for the simulator itself. They are reported for
  // information and do not affect the exit status.
  if (have_table) {
    std::printf("\nsupplementary experiment checks (not gating)\n");
    int wins = 0;
    for (int s = 0; s < kSeeds; ++s)
      wins += table.rmse[kGraph][static_cast<std::size_t>(s)] < table.rmse[kLocal][static_cast<std::size_t>(s)];
    report("graphfedavg-beats-local", [&] {
      return pass_if(wins >= 4, fmt("GraphFedAvg < LocalOnly in %d/5 seeds (want >= 4); means %.4f vs %.4f",
                                    wins, mean(table.rmse[kGraph]), mean(table.rmse[kLocal])));
    });
    report("centralized-vs-local", [&] {
      const double c = mean(table.rmse[kCentral]), l = mean(table.rmse[kLocal]);
      return pass_if(c <= l, fmt("mean test RMSE Centralized %.4f vs LocalOnly %.4f", c, l));
    });
  }

  fs::remove_all(scratch);
  std::printf("\n%s: %d gating criterion(s) failed\n", gating_failures == 0 ? "OK" : "NOT OK",
              gating_failures);
  return gating_failures == 0 ? 0 : 1;
}
