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

#include "neurotext/optim.hpp"

#include <algorithm>
#include <cmath>

#include "neurotext/errors.hpp"

namespace neurotext {

void CyclicLrSchedule::validate() const {
  if (!(lr_min > 0.0) || !(lr_min < lr_max)) {
    throw ParameterError("cyclic schedule needs 0 < lr_min < lr_max");
  }
  if (period_steps < 1) throw ParameterError("cyclic schedule period must be >= 1 step");
}

double CyclicLrSchedule::rate(std::uint64_t step) const {
  const double phase = static_cast<double>(step % period_steps) / static_cast<double>(period_steps);
  const double w = 1.0 - std::abs(2.0 * phase - 1.0);
  return std::clamp(lr_min * (1.0 - w) + lr_max * w, lr_min, lr_max);
}

void round_to_float32(Tensor& t) {
  for (double& v : t.values()) v = static_cast<double>(static_cast<float>(v));
}

void adam_step(std::span<ParamRef> params, AdamState& state, double rate,
               bool round_to_float32_flag) {
  if (!(rate > 0.0)) throw ParameterError("adam_step: rate must be > 0");
  if (state.m.empty()) {
    for (const ParamRef& p : params) {
      state.m.emplace_back(p.value->size(), 0.0);
      state.v.emplace_back(p.value->size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("adam_step: state tracks " + std::to_string(state.m.size()) +
                         " parameters, given " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const ParamRef& p = params[k];
    if (p.grad.size() != p.value->size() || state.m[k].size() != p.value->size()) {
      throw DimensionError("adam_step: size mismatch for parameter '" + p.name + "'");
    }
    for (std::size_t i = 0; i < p.grad.size(); ++i) {
      if (!std::isfinite(p.grad[i])) {
        throw NumericError("non-finite gradient in parameter '" + p.name + "' at element " +
                           std::to_string(i) + " (value " + std::to_string(p.grad[i]) + ")");
      }
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    ParamRef& p = params[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    auto values = p.value->values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = p.grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      values[i] -= rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.eps);
    }
    if (round_to_float32_flag) round_to_float32(*p.value);
  }
}

}  // namespace neurotext
