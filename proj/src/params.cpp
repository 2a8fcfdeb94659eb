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

#include "neurotext/params.hpp"

#include <cmath>
#include <cstdio>

#include "neurotext/errors.hpp"
#include "neurotext/hash.hpp"
#include "neurotext/rng.hpp"

namespace neurotext {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Tensor& ParamStore::add(std::string name, Tensor init) {
  if (index_.contains(name)) throw UsageError("duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(init)});
  return entries_.back().value;
}

Tensor& ParamStore::add_uniform(std::string name, Shape shape, std::size_t fan_in,
                                std::uint64_t seed) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  Rng rng(mix_seed({seed, fnv1a(name)}));
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  round_to_float32(t);
  return add(std::move(name), std::move(t));
}

bool ParamStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t ParamStore::index_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

Tensor& ParamStore::at(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].value;
}

const Tensor& ParamStore::at(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].value;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

GradBuffer::GradBuffer(const ParamStore& store) {
  for (const auto& e : store.entries()) grads_.emplace_back(e.value.size(), 0.0);
}

void GradBuffer::zero() {
  for (auto& g : grads_) std::fill(g.begin(), g.end(), 0.0);
}

void GradBuffer::scale(double s) {
  for (auto& g : grads_) {
    for (double& v : g) v *= s;
  }
}

void GradBuffer::add(const GradBuffer& other) {
  if (other.grads_.size() != grads_.size()) throw DimensionError("gradient buffers differ in size");
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    for (std::size_t j = 0; j < grads_[i].size(); ++j) grads_[i][j] += other.grads_[i][j];
  }
}

std::vector<ParamRef> GradBuffer::refs(ParamStore& store) const {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    auto& e = store.entries()[i];
    out.push_back({e.name, &e.value, grads_[i]});
  }
  return out;
}

BoundParams::BoundParams(Tape& tape, const ParamStore& store)
    : tape_(&tape), store_(&store), vars_(store.size()) {}

Var BoundParams::operator()(std::string_view name) {
  const std::size_t i = store_->index_of(name);
  if (vars_[i].id == Var{}.id) vars_[i] = tape_->param(store_->entries()[i].value);
  return vars_[i];
}

void BoundParams::accumulate_grads(GradBuffer& out) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].id == Var{}.id) continue;
    const auto g = tape_->grad(vars_[i]);
    if (g.empty()) continue;
    auto& dst = out[i];
    for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j];
  }
}

}  // namespace neurotext
