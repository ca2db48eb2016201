// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace fedgraph {

// 64-bit FNV-1a. Used for checkpoint integrity, config hashes and input
// file digests; not a cryptographic hash.
class Fnv1a64 {
 public:
  void update(std::span<const std::byte> bytes) noexcept {
    for (std::byte b : bytes) {
      state_ ^= static_cast<std::uint64_t>(b);
      state_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view s) noexcept { update(std::as_bytes(std::span(s.data(), s.size()))); }
  std::uint64_t value() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
  Fnv1a64 h;
  h.update(s);
  return h.value();
}

// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

// Digest of a file's bytes, as hex64.
std::string file_digest(const std::filesystem::path& path);

}  // namespace fedgraph
