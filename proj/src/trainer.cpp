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

#include "neurotext/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "neurotext/ctc.hpp"
#include "neurotext/errors.hpp"
#include "neurotext/rng.hpp"
#include "neurotext/vocab.hpp"

namespace neurotext {

void TrainConfig::validate() const {
  if (steps == 0 || batch_size == 0) throw ParameterError("steps and batch_size must be >= 1");
  if (!(lr_min > 0.0 && lr_min < lr_max)) throw ParameterError("need 0 < lr_min < lr_max");
  if (!(lr_period_epochs > 0.0)) throw ParameterError("lr_period_epochs must be > 0");
  if (!(max_jitter_s >= 0.0)) throw ParameterError("max_jitter_s must be >= 0");
  if (!(clip_norm >= 0.0)) throw ParameterError("clip_norm must be >= 0");
}

Trainer::Trainer(Model& model, const Dataset& data, TrainConfig config)
    : model_(&model), data_(&data), cfg_(config), train_(data.indices("train")) {
  threads_ = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  cfg_.validate();
  if (train_.empty()) throw DataError("dataset has no training utterances");
}

void Trainer::set_state(std::size_t step, AdamState adam) {
  step_ = step;
  adam_ = std::move(adam);
}

CyclicLrSchedule Trainer::schedule() const {
  const double steps_per_epoch = static_cast<double>(train_.size()) / static_cast<double>(cfg_.batch_size);
  CyclicLrSchedule s;
  s.lr_min = cfg_.lr_min;
  s.lr_max = cfg_.lr_max;
  s.period_steps = std::max<std::uint64_t>(2, static_cast<std::uint64_t>(std::llround(cfg_.lr_period_epochs * steps_per_epoch)));
  return s;
}

std::vector<std::size_t> Trainer::batch(std::size_t step) const {
  // Item k of an endless stream of per-epoch permutations.
  const std::size_t N = train_.size();
  std::vector<std::size_t> out;
  std::size_t cached_epoch = static_cast<std::size_t>(-1);
  std::vector<std::size_t> perm;
  for (std::size_t k = step * cfg_.batch_size; k < (step + 1) * cfg_.batch_size; ++k) {
    const std::size_t epoch = k / N;
    if (epoch != cached_epoch) {
      perm = train_;
      Rng rng(mix_seed({cfg_.seed, 0xe90cULL, epoch}));
      for (std::size_t i = N; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
      cached_epoch = epoch;
    }
    out.push_back(perm[k % N]);
  }
  return out;
}

StepLog Trainer::train_step() {
  StepLog log;
  log.step = step_;
  log.lr = schedule().rate(step_);
  log.decay = model_->spec.reg.decay(step_);
  const auto items = batch(step_);

  // Fixed groups of consecutive batch items, each summed in order, so the
  // result does not depend on the thread count.
  struct ItemResult {
    bool used = false;
    double loss = 0, ctc = 0, mfcc = 0, akt = 0, joint = 0, session = 0;
  };
  std::vector<ItemResult> results(items.size());
  const std::size_t groups = std::min(kGradGroups, items.size());
  std::vector<GradBuffer> partial(groups);
  std::vector<std::exception_ptr> errors(groups);
  auto run_group = [&](std::size_t g) {
    try {
      partial[g] = GradBuffer(model_->params);
      const std::size_t b = g * items.size() / groups, e = (g + 1) * items.size() / groups;
      for (std::size_t j = b; j < e; ++j) {
        const std::uint64_t useed = mix_seed({cfg_.seed, step_, j});
        const JitterResult jr = jitter(data_->utterances[items[j]], cfg_.max_jitter_s, useed);
        const Utterance& u = jr.utterance;
        const std::size_t frames = model_->spec.encoder.output_frames(u.frames());
        if (frames < ctc_min_frames(CharVocab::encode(u.text))) continue;
        Tape tape;
        BoundParams params(tape, model_->params);
        const LossParts parts = utterance_loss(params, *model_, u, step_, true, useed);
        const double loss = tape.value(parts.total).item();
        if (!std::isfinite(loss)) {
          throw NumericError("non-finite loss at step " + std::to_string(step_) + " on utterance " +
                             std::to_string(items[j]));
        }
        tape.backward(parts.total);
        params.accumulate_grads(partial[g]);
        auto val = [&](Var v) { return v.id == Var{}.id ? 0.0 : tape.value(v).item(); };
        results[j] = {true, loss, val(parts.ctc), val(parts.mfcc), val(parts.akt), val(parts.joint), val(parts.session)};
      }
    } catch (...) {
      errors[g] = std::current_exception();
    }
  };
  const std::size_t threads = std::min(groups, std::max<std::size_t>(1, threads_));
  if (threads <= 1) {
    for (std::size_t g = 0; g < groups; ++g) run_group(g);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t g = next++; g < groups; g = next++) run_group(g);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  GradBuffer grads(model_->params);
  for (const auto& p : partial) grads.add(p);
  for (const auto& r : results) {
    if (!r.used) {
      ++log.skipped;
      continue;
    }
    log.loss += r.loss;
    log.ctc += r.ctc;
    log.mfcc += r.mfcc;
    log.akt += r.akt;
    log.joint += r.joint;
    log.session += r.session;
    ++log.utterances;
  }
  if (log.utterances == 0) throw DataError("every utterance of batch " + std::to_string(step_) + " was unalignable");
  const double inv = 1.0 / static_cast<double>(log.utterances);
  for (double* x : {&log.loss, &log.ctc, &log.mfcc, &log.akt, &log.joint, &log.session}) *x *= inv;
  grads.scale(inv);

  double n2 = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i)
    for (double g : grads[i]) n2 += g * g;
  log.grad_norm = std::sqrt(n2);
  if (!std::isfinite(log.grad_norm)) throw NumericError("non-finite gradient at step " + std::to_string(step_));
  if (cfg_.clip_norm > 0.0 && log.grad_norm > cfg_.clip_norm) grads.scale(cfg_.clip_norm / log.grad_norm);

  auto refs = grads.refs(model_->params);
  adam_step(refs, adam_, log.lr, true);
  ++step_;
  return log;
}

void Trainer::run(std::size_t until, const std::function<void(const StepLog&)>& on_step) {
  while (step_ < until) {
    const StepLog log = train_step();
    if (on_step) on_step(log);
  }
}

}  // namespace neurotext
