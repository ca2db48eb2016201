// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace fedgraph {

// Deterministic PRNG used everywhere in the library.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The standard distributions are not (their algorithms are
// implementation-defined), so all derived variates are computed here from
// raw engine output. This keeps generated datasets, initial weights and
// shuffles bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller (both variates are used).
  double normal();
  // Uniform integer on [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates shuffle.
  void shuffle(std::span<std::size_t> values);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

// Seed for a named sub-stream of a global seed, e.g. one stream per client.
std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t stream,
                          std::uint64_t purpose = 0);

}  // namespace fedgraph
