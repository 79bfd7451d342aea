// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tissuenet/arch_io.hpp"
#include "tissuenet/error.hpp"

namespace tissuenet {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'N', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(std::string_view s) { buf_.append(s); }
  const std::string& data() const { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& data, std::string origin) : d_(data), origin_(std::move(origin)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string bytes(std::uint64_t n) {
    need(n);
    std::string s = d_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == d_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > d_.size() - pos_) {
      fail(ErrorCategory::format, origin_ + ": truncated at byte " + std::to_string(pos_));
    }
  }
  std::uint64_t get(int n) {
    need(static_cast<std::uint64_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(d_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  const std::string& d_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ArchSpec& arch, Model& model,
                     const std::string& metadata) {
  Writer w;
  w.bytes(std::string_view(kMagic, sizeof kMagic));
  w.u32(kVersion);
  const std::string arch_text = arch_to_json(arch);
  w.u64(arch_text.size());
  w.bytes(arch_text);
  w.u64(metadata.size());
  w.bytes(metadata);
  const std::vector<Parameter*> params = model.parameters();
  w.u64(params.size());
  for (const Parameter* p : params) {
    w.u32(static_cast<std::uint32_t>(p->name.size()));
    w.bytes(p->name);
    w.u32(static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d : p->value.shape()) w.u64(d);
    for (double v : p->value.values()) w.f64(v);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::io, "cannot write '" + path.string() + "'");
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) fail(ErrorCategory::io, "write to '" + path.string() + "' failed");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  const std::string data = read_text_file(path);
  const std::string origin = path.string();
  Reader r(data, origin);
  if (r.bytes(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) {
    fail(ErrorCategory::format, origin + ": not a checkpoint (bad magic)");
  }
  if (const std::uint32_t v = r.u32(); v != kVersion) {
    fail(ErrorCategory::format, origin + ": unsupported checkpoint version " + std::to_string(v));
  }
  Checkpoint c;
  c.arch = arch_from_json(r.bytes(r.u64()));
  c.metadata = r.bytes(r.u64());
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.bytes(r.u32());
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) v = r.f64();
    t.value = Tensor(std::move(shape), std::move(values));
    c.params.push_back(std::move(t));
  }
  if (!r.done()) fail(ErrorCategory::format, origin + ": trailing bytes after parameters");
  return c;
}

void apply_checkpoint(const Checkpoint& ckpt, Model& model) {
  const std::vector<Parameter*> params = model.parameters();
  if (params.size() != ckpt.params.size()) {
    fail(ErrorCategory::format, "checkpoint holds " + std::to_string(ckpt.params.size()) +
                                    " parameters, model has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const NamedTensor& t = ckpt.params[i];
    if (t.name != params[i]->name || t.value.shape() != params[i]->value.shape()) {
      fail(ErrorCategory::format, "checkpoint parameter '" + t.name + "' [" +
                                      shape_to_string(t.value.shape()) + "] does not match '" +
                                      params[i]->name + "' [" +
                                      shape_to_string(params[i]->value.shape()) + "]");
    }
    params[i]->value = t.value;
  }
}

Model load_model(const Checkpoint& ckpt) {
  Model m = instantiate(ckpt.arch);
  apply_checkpoint(ckpt, m);
  return m;
}

}  // namespace tissuenet
