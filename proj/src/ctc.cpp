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

#include "neurotext/ctc.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "neurotext/errors.hpp"

namespace neurotext {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = a > b ? a : b;
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

std::size_t ctc_min_frames(std::span<const int> target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

CtcResult ctc_loss(std::span<const double> logpost, std::size_t frames, std::size_t symbols,
                   std::span<const int> target, int blank) {
  if (logpost.size() != frames * symbols) {
    throw DimensionError("ctc_loss: " + std::to_string(logpost.size()) + " values for " +
                         std::to_string(frames) + "x" + std::to_string(symbols) + " posteriors");
  }
  for (int id : target) {
    if (id < 0 || static_cast<std::size_t>(id) >= symbols || id == blank) {
      throw DataError("ctc_loss: target label " + std::to_string(id) + " is invalid");
    }
  }
  const std::size_t need = ctc_min_frames(target);
  if (frames < need || frames == 0) {
    throw DimensionError("target unalignable: " + std::to_string(target.size()) +
                         " labels need at least " + std::to_string(std::max<std::size_t>(need, 1)) +
                         " frames, got " + std::to_string(frames));
  }

  // Extended label sequence: blank, l1, blank, l2, ..., blank.
  const std::size_t S = 2 * target.size() + 1;
  std::vector<int> ext(S, blank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  auto lp = [&](std::size_t t, std::size_t s) { return logpost[t * symbols + ext[s]]; };
  auto skip_ok = [&](std::size_t s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

  std::vector<double> alpha(frames * S, kNegInf), beta(frames * S, kNegInf);
  alpha[0] = lp(0, 0);
  if (S > 1) alpha[1] = lp(0, 1);
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double a = alpha[(t - 1) * S + s];
      if (s >= 1) a = log_add(a, alpha[(t - 1) * S + s - 1]);
      if (skip_ok(s)) a = log_add(a, alpha[(t - 1) * S + s - 2]);
      alpha[t * S + s] = a == kNegInf ? kNegInf : a + lp(t, s);
    }
  }
  const std::size_t last = frames - 1;
  beta[last * S + S - 1] = lp(last, S - 1);
  if (S > 1) beta[last * S + S - 2] = lp(last, S - 2);
  for (std::size_t t = last; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double b = beta[(t + 1) * S + s];
      if (s + 1 < S) b = log_add(b, beta[(t + 1) * S + s + 1]);
      if (s + 2 < S && skip_ok(s + 2)) b = log_add(b, beta[(t + 1) * S + s + 2]);
      beta[t * S + s] = b == kNegInf ? kNegInf : b + lp(t, s);
    }
  }
  double log_total = alpha[last * S + S - 1];
  if (S > 1) log_total = log_add(log_total, alpha[last * S + S - 2]);

  CtcResult r;
  r.loss = -log_total;
  r.grad.assign(frames * symbols, 0.0);
  if (!std::isfinite(log_total)) return r;
  std::vector<double> occ(symbols);
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(occ.begin(), occ.end(), kNegInf);
    for (std::size_t s = 0; s < S; ++s) {
      const double ab = alpha[t * S + s] + beta[t * S + s];
      if (ab == kNegInf) continue;
      occ[ext[s]] = log_add(occ[ext[s]], ab - lp(t, s));
    }
    for (std::size_t k = 0; k < symbols; ++k) {
      if (occ[k] != kNegInf) r.grad[t * symbols + k] = -std::exp(occ[k] - log_total);
    }
  }
  return r;
}

namespace ops {

Var ctc(Tape& tape, Var logpost, std::vector<int> target, int blank) {
  const Tensor& lp = tape.value(logpost);
  if (lp.rank() != 2) throw DimensionError("ctc: expects frames x symbols, got " + shape_str(lp.shape()));
  auto result = std::make_shared<CtcResult>(ctc_loss(lp.values(), lp.dim(0), lp.dim(1), target, blank));
  return tape.record(Tensor::scalar(result->loss), {logpost}, [logpost, result](Tape& tp, Var self) {
    const double g = tp.grad(self)[0];
    auto gl = tp.grad_mut(logpost);
    for (std::size_t i = 0; i < gl.size(); ++i) gl[i] += g * result->grad[i];
  });
}

}  // namespace ops

}  // namespace neurotext
