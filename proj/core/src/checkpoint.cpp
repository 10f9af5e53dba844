// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace askcap {

namespace {

constexpr char kMagic[8] = {'A', 'S', 'K', 'C', 'A', 'P', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw CheckpointError("truncated checkpoint");
  }
  return value;
}

}  // namespace

void write_blob(const std::filesystem::path& path, const Blob& blob) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    put(out, kVersion);
    put(out, static_cast<std::uint32_t>(blob.kind.size()));
    out.write(blob.kind.data(), static_cast<std::streamsize>(blob.kind.size()));
    put(out, static_cast<std::uint32_t>(blob.dims.size()));
    for (auto d : blob.dims) put(out, d);
    put(out, static_cast<std::int64_t>(blob.data.size()));
    out.write(reinterpret_cast<const char*>(blob.data.data()),
              static_cast<std::streamsize>(blob.data.size() * static_cast<Eigen::Index>(sizeof(double))));
    if (!out) throw CheckpointError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Blob read_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(path.string() + ": not a checkpoint");
  }
  if (get<std::uint32_t>(in) != kVersion) throw CheckpointError(path.string() + ": unsupported version");
  Blob blob;
  const auto kind_len = get<std::uint32_t>(in);
  if (kind_len > 256) throw CheckpointError("corrupt checkpoint header");
  blob.kind.resize(kind_len);
  if (!in.read(blob.kind.data(), kind_len)) throw CheckpointError("truncated checkpoint");
  const auto ndims = get<std::uint32_t>(in);
  if (ndims > 64) throw CheckpointError("corrupt checkpoint header");
  for (std::uint32_t i = 0; i < ndims; ++i) blob.dims.push_back(get<std::int64_t>(in));
  const auto n = get<std::int64_t>(in);
  if (n < 0 || n > (std::int64_t{1} << 32)) throw CheckpointError("corrupt checkpoint header");
  blob.data.resize(n);
  if (!in.read(reinterpret_cast<char*>(blob.data.data()),
               static_cast<std::streamsize>(n * static_cast<std::int64_t>(sizeof(double))))) {
    throw CheckpointError("truncated checkpoint");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes in checkpoint");
  return blob;
}

void save_captioner(const std::filesystem::path& path, const CaptionerParams& params) {
  const auto& s = params.shape();
  write_blob(path, {"captioner", {s.vocab, s.width, s.feature_width, s.pos_width}, params.flat()});
}

CaptionerParams load_captioner(const std::filesystem::path& path, const CaptionerShape* expected) {
  Blob blob = read_blob(path);
  if (blob.kind != "captioner" || blob.dims.size() != 4) {
    throw CheckpointError(path.string() + ": not a captioner checkpoint");
  }
  const CaptionerShape shape{static_cast<int>(blob.dims[0]), static_cast<int>(blob.dims[1]),
                             static_cast<int>(blob.dims[2]), static_cast<int>(blob.dims[3])};
  if (expected != nullptr && !(shape == *expected)) {
    throw CheckpointError(path.string() + ": captioner shape mismatch");
  }
  CaptionerParams params;
  try {
    params = CaptionerParams(shape);
  } catch (const ConfigError&) {
    throw CheckpointError(path.string() + ": invalid captioner shape");
  }
  if (params.flat().size() != blob.data.size()) {
    throw CheckpointError(path.string() + ": parameter count mismatch");
  }
  params.flat() = std::move(blob.data);
  return params;
}

}  // namespace askcap
