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

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "neurotext/arpa.hpp"
#include "neurotext/checkpoint.hpp"
#include "neurotext/config.hpp"
#include "neurotext/eval.hpp"
#include "neurotext/trainer.hpp"

namespace neurotext {

/// Throws DataError unless the dataset was generated from cfg.data.
void check_dataset(const RunConfig& cfg, const Dataset& ds);

/// Keeps round(fraction * N) training utterances spread evenly over
/// recording order; test utterances are untouched.
Dataset with_train_fraction(const Dataset& ds, double fraction);

/// Throws DataError if an LM word uses a character outside the alphabet.
void check_lm_vocab(const ArpaModel& lm, const std::string& alphabet);

/// Task LM from the training sentences.
std::shared_ptr<const ArpaModel> task_lm(const RunConfig& cfg, const Dataset& ds);
/// LM selected by cfg.decode.lm (null for none).
std::shared_ptr<const ArpaModel> configured_lm(const RunConfig& cfg, const Dataset& ds);

struct TrainOptions {
  /// Checkpoints and train_log.jsonl go here; empty keeps everything in memory.
  std::string run_dir;
  bool resume = false;
  std::size_t threads = 0;
  std::function<void(const StepLog&)> on_step;
};

struct TrainOutcome {
  Model model;
  AdamState adam;
  std::size_t step = 0;
  std::string last_checkpoint;
};

/// Trains to cfg.train.steps. On a numeric failure the NumericError is
/// rethrown after naming the last good checkpoint, which is left in place.
TrainOutcome train_model(const RunConfig& cfg, const Dataset& ds, const TrainOptions& opt = {});

nlohmann::json step_log_json(const StepLog& log, const RegSpec& reg);

struct ConditionReport {
  std::string condition;
  ErrorRate wer;
  ErrorRate cer;
  std::vector<Transcript> transcripts;
};

struct ModelReport {
  std::string fingerprint;
  std::uint64_t seed = 0;
  std::size_t step = 0;
  std::vector<ConditionReport> conditions;
  std::vector<CutoffCurve> cutoffs;
  std::vector<IncrementalTrial> incremental;
  /// Between/within-session variance of test latents; NaN when too few.
  double session_variance_ratio = 0.0;
};

struct EvaluateOptions {
  /// Optional general-domain LM for the L1 condition.
  std::shared_ptr<const ArpaModel> general_lm;
  bool cutoffs = true;
  bool incremental = true;
};

/// NL, L1 (when given) and L2 decodes of the test split, cutoff curves,
/// incremental traces and the latent session variance ratio.
ModelReport evaluate_model(const RunConfig& cfg, const Model& model, std::size_t step, const Dataset& ds,
                           const EvaluateOptions& opt = {});

double latent_variance_ratio(const Model& model, const Dataset& ds, const std::vector<std::size_t>& indices,
                             double max_jitter_s);

nlohmann::json report_json(const ModelReport& r);
/// Writes report.json, wer.csv, cutoff.csv, cutoff.svg and incremental.txt.
void write_report_files(const ModelReport& r, const std::string& dir);
/// Table of (time, hypothesis) rows.
std::string incremental_text(const IncrementalTrial& t);

/// One trained model of the ablation grid.
struct CellSpec {
  std::string reg = "mfcc+akt";
  bool calibration = true;
  double train_fraction = 1.0;
  std::uint64_t seed = 1;

  std::string name() const;
};

struct CellResult {
  CellSpec cell;
  std::string fingerprint;
  bool ok = false;
  std::string error;
  std::map<std::string, ErrorRate> wer;
  std::map<std::string, ErrorRate> cer;
  double session_variance_ratio = 0.0;
};

/// "none", "mfcc", "akt" or "mfcc+akt".
std::vector<RegTarget> reg_condition_targets(const std::string& reg);
/// Base config adjusted for one cell.
RunConfig cell_config(const RunConfig& base, const CellSpec& cell);
/// Trains and evaluates one cell under NL and L2. Failures are recorded.
CellResult run_cell(const RunConfig& base, const CellSpec& cell, std::size_t threads = 0);

nlohmann::json cell_json(const CellResult& r);
/// Fig-2a style series: L2 WER per train fraction for each (reg, calibration, seed).
std::vector<Series> fraction_series(const std::vector<CellResult>& cells);

}  // namespace neurotext
