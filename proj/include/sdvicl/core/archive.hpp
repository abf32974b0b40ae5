// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sdvicl/core/types.hpp"

namespace sdvicl {

/// 64-bit FNV-1a. Stable across platforms; used for content addressing
/// and container checksums, not for security.
class Fnv1a {
 public:
  void update(const void* data, std::size_t n);
  void update(std::string_view s) { update(s.data(), s.size()); }
  template <typename T>
  void update_pod(const T& v) { update(&v, sizeof(T)); }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t v);

std::uint64_t content_hash(const ImageRGB& img);
std::uint64_t content_hash(const Latent& z);

/// Named float32 tensors plus string metadata, serialized as
///   "SVTA" | u32 version | metadata | tensors | u64 FNV-1a of all prior bytes.
/// Loading rejects bad magic, truncation and checksum mismatches with an io error.
struct TensorArchive {
  struct Tensor {
    std::vector<std::int64_t> dims;
    std::vector<float> data;
  };

  std::map<std::string, std::string> metadata;
  std::map<std::string, Tensor> tensors;

  void put(const std::string& name, const Planar& m);
  void put(const std::string& name, std::vector<std::int64_t> dims, std::vector<float> data);
  Planar get_planar(const std::string& name) const;
  const Tensor& at(const std::string& name) const;
  const std::string& meta(const std::string& key) const;

  std::string serialize() const;
  static TensorArchive deserialize(std::string_view bytes);

  /// Writes to a sibling temp file then renames over `path`.
  void save(const std::string& path) const;
  static TensorArchive load(const std::string& path);
};

}  // namespace sdvicl
