// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedgraph/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "fedgraph/aggregation.hpp"
#include "fedgraph/digest.hpp"
#include "fedgraph/errors.hpp"

namespace fedgraph {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'F', 'G', 'C', 'K', 'P', 'T', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void put_doubles(std::span<const double> v) { put_bytes(v.data(), v.size_bytes()); }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const char> data) : data_(data) {}

  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  std::string get_string(std::size_t n) {
    const char* p = take(n);
    return std::string(p, n);
  }
  void get_doubles(std::span<double> out) {
    std::memcpy(out.data(), take(out.size_bytes()), out.size_bytes());
  }
  std::size_t position() const { return pos_; }

 private:
  const char* take(std::size_t n) {
    if (n > data_.size() - pos_) throw IntegrityError("checkpoint is truncated");
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::span<const char> data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const GruSeq2Seq& model,
                     const AdamState* optimizer) {
  const ParamLayout layout = ParamLayout::for_arch(model.arch);
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kVersion);
  const GruArch& a = model.arch;
  for (int v : {a.input_dim, a.hidden_dim, a.num_layers, a.input_len, a.output_len})
    w.put<std::int32_t>(v);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(layout.tensors().size()));
  for (const TensorSpec& t : layout.tensors()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
    w.put_bytes(t.name.data(), t.name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.put<std::uint64_t>(d);
    w.put<std::uint64_t>(t.offset);
  }
  w.put<std::uint64_t>(layout.total_len());
  w.put_doubles(flatten(model, layout));
  w.put<std::uint8_t>(optimizer ? 1 : 0);
  if (optimizer) {
    w.put<std::int64_t>(optimizer->step);
    const AdamConfig& c = optimizer->config;
    for (double v : {c.lr, c.beta1, c.beta2, c.eps}) w.put<double>(v);
    w.put_doubles(flatten(optimizer->m, layout));
    w.put_doubles(flatten(optimizer->v, layout));
  }
  Fnv1a64 h;
  h.update(std::as_bytes(std::span(w.bytes())));
  w.put<std::uint64_t>(h.value());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw Error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const GruArch* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::vector<char> bytes(std::istreambuf_iterator<char>(in), {});
  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint64_t) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IntegrityError(path.string() + ": not a fedgraph checkpoint");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  Fnv1a64 h;
  h.update(std::as_bytes(std::span(bytes.data(), body)));
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (stored != h.value()) throw IntegrityError(path.string() + ": checksum mismatch");

  Reader r(std::span(bytes.data(), body));
  r.get_string(sizeof(kMagic));
  if (const auto version = r.get<std::uint32_t>(); version != kVersion) {
    throw IntegrityError(path.string() + ": unsupported checkpoint version " +
                         std::to_string(version));
  }
  GruArch arch;
  arch.input_dim = r.get<std::int32_t>();
  arch.hidden_dim = r.get<std::int32_t>();
  arch.num_layers = r.get<std::int32_t>();
  arch.input_len = r.get<std::int32_t>();
  arch.output_len = r.get<std::int32_t>();
  try {
    arch.validate();
  } catch (const ConfigError& e) {
    throw IntegrityError(path.string() + ": " + e.what());
  }
  if (expected && !(*expected == arch)) {
    throw LayoutError(path.string() + ": checkpoint architecture (hidden " +
                      std::to_string(arch.hidden_dim) + ", layers " +
                      std::to_string(arch.num_layers) + ") does not match the configuration");
  }
  const ParamLayout layout = ParamLayout::for_arch(arch);
  const auto n_tensors = r.get<std::uint32_t>();
  if (n_tensors != layout.tensors().size()) throw LayoutError(path.string() + ": tensor count mismatch");
  for (const TensorSpec& want : layout.tensors()) {
    TensorSpec got;
    got.name = r.get_string(r.get<std::uint32_t>());
    got.shape.resize(r.get<std::uint32_t>());
    for (auto& d : got.shape) d = r.get<std::uint64_t>();
    got.offset = r.get<std::uint64_t>();
    if (!(got == want)) throw LayoutError(path.string() + ": tensor '" + want.name + "' differs");
  }
  if (r.get<std::uint64_t>() != layout.total_len()) {
    throw LayoutError(path.string() + ": parameter count mismatch");
  }
  std::vector<double> row(layout.total_len());
  r.get_doubles(row);
  Checkpoint ck{unflatten(row, layout), std::nullopt};
  if (r.get<std::uint8_t>() != 0) {
    AdamState s = AdamState::for_model(ck.model);
    s.step = r.get<std::int64_t>();
    s.config.lr = r.get<double>();
    s.config.beta1 = r.get<double>();
    s.config.beta2 = r.get<double>();
    s.config.eps = r.get<double>();
    r.get_doubles(row);
    s.m = unflatten(row, layout);
    r.get_doubles(row);
    s.v = unflatten(row, layout);
    ck.optimizer = std::move(s);
  }
  if (r.position() != body) throw IntegrityError(path.string() + ": trailing bytes");
  return ck;
}

}  // namespace fedgraph
