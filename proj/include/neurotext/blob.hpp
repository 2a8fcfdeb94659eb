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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "neurotext/tensor.hpp"

namespace neurotext {

/// Tensor record: "NTXT", u16 version, u16 dtype, u32 rank, u64 dims, then
/// little-endian row-major payload.
enum class BlobDtype : std::uint16_t { kFloat32 = 1, kFloat64 = 2 };

inline constexpr std::uint16_t kBlobVersion = 1;

/// Returns the number of bytes written.
std::uint64_t write_blob(std::ostream& out, const Tensor& t, BlobDtype dtype = BlobDtype::kFloat32);
Tensor read_blob(std::istream& in);

void save_blob(const std::string& path, const Tensor& t, BlobDtype dtype = BlobDtype::kFloat32);
Tensor load_blob(const std::string& path);

/// FNV-1a 64 of a file's bytes.
std::uint64_t file_checksum(const std::string& path);

}  // namespace neurotext
