// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "askcap/captioner.hpp"

namespace askcap {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Versioned binary blob: magic, kind tag, shape header, raw doubles.
struct Blob {
  std::string kind;
  std::vector<std::int64_t> dims;
  Eigen::VectorXd data;
};

void write_blob(const std::filesystem::path& path, const Blob& blob);
Blob read_blob(const std::filesystem::path& path);

void save_captioner(const std::filesystem::path& path, const CaptionerParams& params);
/// Throws CheckpointError on corrupt files or, when `expected` is given, on a
/// shape mismatch.
CaptionerParams load_captioner(const std::filesystem::path& path,
                               const CaptionerShape* expected = nullptr);

}  // namespace askcap
