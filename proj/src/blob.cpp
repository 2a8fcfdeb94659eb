// Copyright 2026 The neurotext Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "neurotext/blob.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "neurotext/errors.hpp"
#include "neurotext/hash.hpp"

namespace neurotext {

static_assert(std::endian::native == std::endian::little, "blob I/O assumes a little-endian host");

namespace {

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("truncated tensor record");
  return v;
}

}  // namespace

std::uint64_t write_blob(std::ostream& out, const Tensor& t, BlobDtype dtype) {
  out.write("NTXT", 4);
  put<std::uint16_t>(out, kBlobVersion);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(dtype));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
  if (dtype == BlobDtype::kFloat32) {
    std::vector<float> buf(t.values().begin(), t.values().end());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
  } else {
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * 8));
  }
  if (!out) throw DataError("write failed");
  const std::size_t elem = dtype == BlobDtype::kFloat32 ? 4 : 8;
  return 12 + 8 * t.rank() + elem * t.size();
}

Tensor read_blob(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw DataError("truncated tensor record");
  if (std::memcmp(magic, "NTXT", 4) != 0) throw DataError("bad tensor magic");
  const auto version = get<std::uint16_t>(in);
  if (version != kBlobVersion) throw DataError("unsupported tensor record version " + std::to_string(version));
  const auto dtype = get<std::uint16_t>(in);
  if (dtype != 1 && dtype != 2) throw DataError("unknown tensor dtype " + std::to_string(dtype));
  const auto rank = get<std::uint32_t>(in);
  if (rank > 8) throw DataError("tensor rank " + std::to_string(rank) + " too large");
  Shape shape(rank);
  for (auto& d : shape) d = get<std::uint64_t>(in);
  Tensor t(shape);
  if (dtype == 1) {
    std::vector<float> buf(t.size());
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4))) {
      throw DataError("truncated tensor payload");
    }
    std::copy(buf.begin(), buf.end(), t.values().begin());
  } else if (!in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * 8))) {
    throw DataError("truncated tensor payload");
  }
  return t;
}

void save_blob(const std::string& path, const Tensor& t, BlobDtype dtype) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_blob(out, t, dtype);
}

Tensor load_blob(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  try {
    return read_blob(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a_bytes(std::as_bytes(std::span<const char>(bytes)));
}

}  // namespace neurotext
