// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sdvicl/core/error.hpp"
#include "sdvicl/core/types.hpp"

namespace sdvicl {

template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One tensor of shape heads x tokens x d, stored as a matrix per head.
template <typename Scalar>
struct HeadStack {
  std::vector<MatrixT<Scalar>> heads;

  HeadStack() = default;
  explicit HeadStack(std::vector<MatrixT<Scalar>> h) : heads(std::move(h)) {}
  static HeadStack zeros(int num_heads, Eigen::Index tokens, Eigen::Index dim) {
    return HeadStack(std::vector<MatrixT<Scalar>>(num_heads, MatrixT<Scalar>::Zero(tokens, dim)));
  }

  int num_heads() const { return static_cast<int>(heads.size()); }
  Eigen::Index tokens() const { return heads.empty() ? 0 : heads.front().rows(); }
  Eigen::Index dim() const { return heads.empty() ? 0 : heads.front().cols(); }

  bool same_shape(const HeadStack& o) const {
    if (heads.size() != o.heads.size()) return false;
    for (std::size_t h = 0; h < heads.size(); ++h) {
      if (heads[h].rows() != o.heads[h].rows() || heads[h].cols() != o.heads[h].cols()) return false;
    }
    return true;
  }

  Scalar max_abs_diff(const HeadStack& o) const {
    if (!same_shape(o)) throw_dimension("max_abs_diff: shape mismatch");
    Scalar m(0);
    for (std::size_t h = 0; h < heads.size(); ++h) m = std::max(m, (heads[h] - o.heads[h]).cwiseAbs().maxCoeff());
    return m;
  }
};

/// Row-stochastic (before contrasting) map of shape heads x q_tokens x k_tokens.
template <typename Scalar>
using AttentionMapT = HeadStack<Scalar>;

/// Decoder ("upsample") or encoder self-attention layer inside the denoiser.
/// `resolution` is the nominal feature-map side (16, 32 or 64 for a 64x64 latent).
struct AttentionSite {
  bool decoder = true;
  int layer_index = 0;  // network depth order
  int resolution = 64;

  std::string name() const {
    return std::string(decoder ? "up" : "down") + std::to_string(layer_index) + "_r" + std::to_string(resolution);
  }
  friend bool operator==(const AttentionSite&, const AttentionSite&) = default;
};

template <typename Scalar>
struct AttentionTensorsT {
  HeadStack<Scalar> q;
  HeadStack<Scalar> k;
  HeadStack<Scalar> v;
  AttentionSite site;
  PathId path;
  int timestep = 0;
};

using HeadStackF = HeadStack<float>;
using AttentionMap = AttentionMapT<float>;
using AttentionTensors = AttentionTensorsT<float>;

/// Numerically stable softmax along each row.
template <typename Derived>
MatrixT<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  MatrixT<Scalar> out = logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const Scalar m = row.maxCoeff();
    row = (row.array() - m).exp().matrix();
    row /= row.sum();
  }
  return out;
}

/// alpha = softmax(Q K^T / (temperature * sqrt(d))), per head.
template <typename Scalar>
AttentionMapT<Scalar> attention_map(const HeadStack<Scalar>& q, const HeadStack<Scalar>& k, double temperature = 1.0) {
  if (q.num_heads() != k.num_heads() || q.dim() != k.dim()) {
    throw_dimension("attention_map: Q and K must share heads and head dimension");
  }
  const Scalar scale = Scalar(1.0 / (temperature * std::sqrt(double(q.dim()))));
  AttentionMapT<Scalar> alpha;
  alpha.heads.reserve(q.heads.size());
  for (std::size_t h = 0; h < q.heads.size(); ++h) {
    alpha.heads.push_back(softmax_rows((q.heads[h] * k.heads[h].transpose()) * scale));
  }
  return alpha;
}

template <typename Scalar>
HeadStack<Scalar> apply_map(const AttentionMapT<Scalar>& alpha, const HeadStack<Scalar>& v) {
  if (alpha.num_heads() != v.num_heads()) throw_dimension("apply_map: head count mismatch");
  HeadStack<Scalar> out;
  out.heads.reserve(v.heads.size());
  for (std::size_t h = 0; h < v.heads.size(); ++h) {
    if (alpha.heads[h].cols() != v.heads[h].rows()) throw_dimension("apply_map: key/value token mismatch");
    out.heads.push_back(alpha.heads[h] * v.heads[h]);
  }
  return out;
}

template <typename Scalar>
void check_tensors(const AttentionTensorsT<Scalar>& at) {
  if (at.q.num_heads() == 0) throw_dimension("attention tensors have no heads");
  if (at.q.num_heads() != at.k.num_heads() || at.k.num_heads() != at.v.num_heads()) {
    throw_dimension("Q, K, V head counts differ");
  }
  if (at.q.dim() != at.k.dim()) throw_dimension("Q and K head dimensions differ");
  if (at.k.tokens() != at.v.tokens()) throw_dimension("K and V token counts differ");
}

/// Plain self-attention feature update: softmax(Q K^T / sqrt(d)) V.
template <typename Scalar>
HeadStack<Scalar> standard_update(const AttentionTensorsT<Scalar>& at) {
  check_tensors(at);
  return apply_map(attention_map(at.q, at.k), at.v);
}

/// alpha' = mu + beta * (alpha - mu), mu the mean of each query row over keys.
/// No renormalization: with beta > 1 entries may leave [0, 1].
template <typename Scalar>
AttentionMapT<Scalar> contrast(const AttentionMapT<Scalar>& alpha, double beta) {
  AttentionMapT<Scalar> out = alpha;
  const Scalar b = Scalar(beta);
  for (auto& m : out.heads) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      auto row = m.row(r);
      const Scalar mu = row.mean();
      row = (mu + b * (row.array() - mu)).matrix();
    }
  }
  return out;
}

/// Concatenates per-prompt tensors along the token axis.
template <typename Scalar>
HeadStack<Scalar> concat_tokens(std::span<const HeadStack<Scalar>> parts) {
  if (parts.empty()) throw Error(ErrorKind::kEmptyPrompt, "no prompt tensors to concatenate");
  const int heads = parts.front().num_heads();
  const Eigen::Index dim = parts.front().dim();
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p.num_heads() != heads || p.dim() != dim) throw_dimension("prompt tensors differ in heads or head dim");
    total += p.tokens();
  }
  HeadStack<Scalar> out = HeadStack<Scalar>::zeros(heads, total, dim);
  for (int h = 0; h < heads; ++h) {
    Eigen::Index row = 0;
    for (const auto& p : parts) {
      out.heads[h].middleRows(row, p.tokens()) = p.heads[h];
      row += p.tokens();
    }
  }
  return out;
}

/// Recomputed attention for the prediction path with implicitly weighted
/// prompt ensembling: one softmax spans the keys of all n prompts.
///   alpha = contrast(softmax(Q (+)K^T / (tau sqrt d)), beta),  update = alpha (+)V
/// If `alpha_out` is non-null the contrasted map is stored there.
template <typename Scalar>
HeadStack<Scalar> vicl_update(const HeadStack<Scalar>& q, std::span<const HeadStack<Scalar>> keys,
                              std::span<const HeadStack<Scalar>> values, double tau, double beta,
                              AttentionMapT<Scalar>* alpha_out = nullptr) {
  if (keys.empty() || values.empty()) throw Error(ErrorKind::kEmptyPrompt, "vicl_update needs at least one prompt");
  if (keys.size() != values.size()) throw_dimension("vicl_update: key and value prompt counts differ");
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].tokens() != values[i].tokens() || keys[i].num_heads() != values[i].num_heads()) {
      throw_dimension("vicl_update: prompt " + std::to_string(i + 1) + " has mismatched K/V token counts");
    }
  }
  if (!(tau > 0.0)) throw ConfigError("tau", "must be positive");
  const HeadStack<Scalar> k = keys.size() == 1 ? keys.front() : concat_tokens(keys);
  const HeadStack<Scalar> v = values.size() == 1 ? values.front() : concat_tokens(values);
  if (q.num_heads() != k.num_heads()) throw_dimension("vicl_update: query and key head counts differ");
  AttentionMapT<Scalar> alpha = contrast(attention_map(q, k, tau), beta);
  HeadStack<Scalar> out = apply_map(alpha, v);
  if (alpha_out) *alpha_out = std::move(alpha);
  return out;
}

/// Uniform average of per-prompt feature updates.
template <typename Scalar>
HeadStack<Scalar> feature_ensemble(std::span<const HeadStack<Scalar>> updates) {
  if (updates.empty()) throw Error(ErrorKind::kEmptyPrompt, "feature_ensemble needs at least one update");
  HeadStack<Scalar> out = updates.front();
  for (std::size_t i = 1; i < updates.size(); ++i) {
    if (!updates[i].same_shape(out)) throw_dimension("feature_ensemble: update shapes differ");
    for (std::size_t h = 0; h < out.heads.size(); ++h) out.heads[h] += updates[i].heads[h];
  }
  if (updates.size() > 1) {
    const Scalar inv = Scalar(1) / Scalar(updates.size());
    for (auto& m : out.heads) m *= inv;
  }
  return out;
}

/// Feature-ensembling baseline: each prompt attended separately, then averaged.
template <typename Scalar>
HeadStack<Scalar> feature_ensemble_update(const HeadStack<Scalar>& q, std::span<const HeadStack<Scalar>> keys,
                                          std::span<const HeadStack<Scalar>> values, double tau, double beta) {
  if (keys.empty()) throw Error(ErrorKind::kEmptyPrompt, "feature_ensemble_update needs at least one prompt");
  if (keys.size() != values.size()) throw_dimension("feature_ensemble_update: key and value prompt counts differ");
  std::vector<HeadStack<Scalar>> per_prompt;
  per_prompt.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    per_prompt.push_back(vicl_update(q, keys.subspan(i, 1), values.subspan(i, 1), tau, beta));
  }
  return feature_ensemble<Scalar>(per_prompt);
}

/// Decoder self-attention sites whose resolution is in `resolutions`,
/// ordered by network depth.
std::vector<AttentionSite> select_sites(std::span<const AttentionSite> all_sites, std::span<const int> resolutions);

}  // namespace sdvicl
