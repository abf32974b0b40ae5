// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/core/archive.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sdvicl {
namespace {

constexpr char kMagic[4] = {'S', 'V', 'T', 'A'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_raw(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put_raw(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T raw() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string str() {
    const auto n = raw<std::uint32_t>();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  void floats(std::vector<float>& out, std::size_t n) {
    need(n * sizeof(float));
    out.resize(n);
    std::memcpy(out.data(), bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error(ErrorKind::kIo, "truncated tensor archive");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void Fnv1a::update(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    state_ ^= p[i];
    state_ *= 0x100000001b3ULL;
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t content_hash(const ImageRGB& img) {
  Fnv1a h;
  h.update_pod(img.height);
  h.update_pod(img.width);
  h.update(img.pixels.data(), sizeof(float) * img.pixels.size());
  return h.digest();
}

std::uint64_t content_hash(const Latent& z) {
  Fnv1a h;
  h.update_pod(z.height);
  h.update_pod(z.width);
  const auto c = z.channels();
  h.update_pod(c);
  h.update(z.values.data(), sizeof(float) * z.values.size());
  return h.digest();
}

void TensorArchive::put(const std::string& name, const Planar& m) {
  put(name, {m.rows(), m.cols()}, std::vector<float>(m.data(), m.data() + m.size()));
}

void TensorArchive::put(const std::string& name, std::vector<std::int64_t> dims, std::vector<float> data) {
  std::int64_t n = 1;
  for (auto d : dims) n *= d;
  if (n != static_cast<std::int64_t>(data.size())) throw_dimension("tensor '" + name + "' size does not match dims");
  tensors[name] = Tensor{std::move(dims), std::move(data)};
}

const TensorArchive::Tensor& TensorArchive::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw Error(ErrorKind::kIo, "tensor archive has no entry '" + name + "'");
  return it->second;
}

const std::string& TensorArchive::meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw Error(ErrorKind::kIo, "tensor archive has no metadata '" + key + "'");
  return it->second;
}

Planar TensorArchive::get_planar(const std::string& name) const {
  const Tensor& t = at(name);
  if (t.dims.size() != 2) throw_dimension("tensor '" + name + "' is not two-dimensional");
  Planar m(t.dims[0], t.dims[1]);
  std::memcpy(m.data(), t.data.data(), t.data.size() * sizeof(float));
  return m;
}

std::string TensorArchive::serialize() const {
  std::string out(kMagic, 4);
  put_raw(out, kVersion);
  put_raw(out, static_cast<std::uint32_t>(metadata.size()));
  for (const auto& [k, v] : metadata) {
    put_string(out, k);
    put_string(out, v);
  }
  put_raw(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_string(out, name);
    put_raw(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_raw(out, d);
    out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
  }
  Fnv1a h;
  h.update(out);
  put_raw(out, h.digest());
  return out;
}

TensorArchive TensorArchive::deserialize(std::string_view bytes) {
  if (bytes.size() < 4 + sizeof(std::uint64_t) || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorKind::kIo, "not a tensor archive (bad magic)");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - sizeof(std::uint64_t));
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof(stored));
  Fnv1a h;
  h.update(body);
  if (h.digest() != stored) throw Error(ErrorKind::kIo, "tensor archive checksum mismatch");

  Reader r(body.substr(4));
  if (r.raw<std::uint32_t>() != kVersion) throw Error(ErrorKind::kIo, "unsupported tensor archive version");
  TensorArchive a;
  const auto n_meta = r.raw<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    a.metadata[k] = r.str();
  }
  const auto n_tensors = r.raw<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    Tensor t;
    std::string name = r.str();
    const auto nd = r.raw<std::uint32_t>();
    std::int64_t n = 1;
    for (std::uint32_t d = 0; d < nd; ++d) {
      t.dims.push_back(r.raw<std::int64_t>());
      if (t.dims.back() < 0) throw Error(ErrorKind::kIo, "negative tensor dimension");
      n *= t.dims.back();
    }
    r.floats(t.data, static_cast<std::size_t>(n));
    a.tensors[name] = std::move(t);
  }
  return a;
}

void TensorArchive::save(const std::string& path) const {
  const std::string bytes = serialize();
  const std::string tmp = path + ".tmp";
  if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
    std::error_code mk;
    std::filesystem::create_directories(parent, mk);
  }
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::kIo, "short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot rename " + tmp + " to " + path + ": " + ec.message());
}

TensorArchive TensorArchive::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace sdvicl
