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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "neurotext/optim.hpp"
#include "neurotext/tensor.hpp"

namespace neurotext {

/// Named parameters in a fixed insertion order. Order matters: optimizer
/// moments, checkpoints and gradient reduction all follow it.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  /// Registers a new parameter; throws UsageError on a duplicate name.
  Tensor& add(std::string name, Tensor init);
  /// Registers a parameter initialised uniformly in +-1/sqrt(fan_in). The
  /// draw depends only on (seed, name), never on registration order.
  Tensor& add_uniform(std::string name, Shape shape, std::size_t fan_in, std::uint64_t seed);

  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;
  std::vector<Entry>& entries() noexcept { return entries_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Gradient buffers aligned with a ParamStore's entries.
class GradBuffer {
 public:
  GradBuffer() = default;
  explicit GradBuffer(const ParamStore& store);

  std::vector<double>& operator[](std::size_t i) { return grads_[i]; }
  const std::vector<double>& operator[](std::size_t i) const { return grads_[i]; }
  std::size_t size() const noexcept { return grads_.size(); }
  void zero();
  void scale(double s);
  void add(const GradBuffer& other);

  /// Optimizer view pairing each parameter with its gradient.
  std::vector<ParamRef> refs(ParamStore& store) const;

 private:
  std::vector<std::vector<double>> grads_;
};

/// Lazily binds store parameters onto one tape, so a forward pass only
/// records the parameters it actually reads.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParamStore& store);

  Var operator()(std::string_view name);
  Tape& tape() noexcept { return *tape_; }

  /// Adds the gradient of every bound parameter into out (after backward).
  void accumulate_grads(GradBuffer& out) const;

 private:
  Tape* tape_;
  const ParamStore* store_;
  std::vector<Var> vars_;
};

}  // namespace neurotext
