// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedgraph/digest.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "fedgraph/errors.hpp"

namespace fedgraph {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  Fnv1a64 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = static_cast<std::size_t>(in.gcount());
    h.update(std::as_bytes(std::span(buf.data(), got)));
  }
  return hex64(h.value());
}

}  // namespace fedgraph
