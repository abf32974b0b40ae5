// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sdvicl {

/// Failure classes. The CLI maps each one onto a distinct exit code.
enum class ErrorKind {
  kConfig,
  kIo,
  kBackend,
  kNumerical,
  kDimension,
  kEmptyPrompt,
  kIncompatibleSchedule,
  kMalformedTrajectory,
  kDegenerateStatistics,
  kAnnotation,
  kIncompatibleEmbeddings,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Invalid configuration value; `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(ErrorKind::kConfig, field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Non-finite latent detected during denoising.
class DivergenceError : public Error {
 public:
  DivergenceError(int step, std::string path)
      : Error(ErrorKind::kNumerical,
              "non-finite latent at step " + std::to_string(step) + " on path " + path),
        step_(step),
        path_(std::move(path)) {}

  int step() const noexcept { return step_; }
  const std::string& path() const noexcept { return path_; }

 private:
  int step_;
  std::string path_;
};

/// Zero spatial variance on one channel of the normalized tensor.
class DegenerateStatisticsError : public Error {
 public:
  explicit DegenerateStatisticsError(int channel)
      : Error(ErrorKind::kDegenerateStatistics,
              "zero standard deviation on channel " + std::to_string(channel)),
        channel_(channel) {}

  int channel() const noexcept { return channel_; }

 private:
  int channel_;
};

[[noreturn]] inline void throw_dimension(const std::string& what) {
  throw Error(ErrorKind::kDimension, what);
}

}  // namespace sdvicl
