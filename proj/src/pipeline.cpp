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

#include "neurotext/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "neurotext/errors.hpp"
#include "neurotext/vocab.hpp"

namespace neurotext {

namespace fs = std::filesystem;
using json = nlohmann::json;

void check_dataset(const RunConfig& cfg, const Dataset& ds) {
  const std::string want = dataset_fingerprint(cfg.data), have = dataset_fingerprint(ds.spec);
  if (want != have) {
    throw DataError("dataset fingerprint " + have + " does not match the config's data section (" + want + ")");
  }
}

Dataset with_train_fraction(const Dataset& ds, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ParameterError("train fraction must be in (0, 1]");
  const auto train = ds.indices("train");
  const std::size_t n = train.size();
  const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  Dataset out;
  out.spec = ds.spec;
  out.sessions = ds.sessions;
  for (std::size_t i = 0; i < k && n > 0; ++i) out.utterances.push_back(ds.utterances[train[i * n / k]]);
  for (std::size_t i : ds.indices("test")) out.utterances.push_back(ds.utterances[i]);
  return out;
}

void check_lm_vocab(const ArpaModel& lm, const std::string& alphabet) {
  for (const auto& w : lm.vocabulary()) {
    if (w == "</s>" || w == "<unk>") continue;
    for (char c : w) {
      if (c == ' ' || alphabet.find(c) == std::string::npos) {
        throw DataError("vocab mismatch: LM word '" + w + "' uses a character outside the model alphabet");
      }
    }
  }
}

std::shared_ptr<const ArpaModel> task_lm(const RunConfig& cfg, const Dataset& ds) {
  const Dataset sub = cfg.train_fraction < 1.0 ? with_train_fraction(ds, cfg.train_fraction) : Dataset{};
  const Dataset& src = cfg.train_fraction < 1.0 ? sub : ds;
  return std::make_shared<const ArpaModel>(train_ngram(src.texts("train"), cfg.lm.order, cfg.lm.discount));
}

std::shared_ptr<const ArpaModel> configured_lm(const RunConfig& cfg, const Dataset& ds) {
  switch (cfg.decode.lm) {
    case LmSource::kNone: return nullptr;
    case LmSource::kTask: return task_lm(cfg, ds);
    case LmSource::kFile: {
      auto lm = std::make_shared<const ArpaModel>(load_arpa(cfg.decode.lm_path));
      check_lm_vocab(*lm, decode_config(cfg, nullptr).alphabet);
      return lm;
    }
  }
  return nullptr;
}

json step_log_json(const StepLog& l, const RegSpec& reg) {
  json weights = json::object();
  for (RegTarget t : reg.targets) weights[reg_target_name(t)] = reg.alpha(t) * l.decay;
  if (reg.mode == RegMode::kJoint) weights["joint"] = reg.alpha_joint * l.decay;
  return json{{"step", l.step},         {"lr", l.lr},           {"loss", l.loss},
              {"ctc", l.ctc},           {"mfcc", l.mfcc},       {"akt", l.akt},
              {"joint", l.joint},       {"session", l.session}, {"reg_weights", weights},
              {"grad_norm", l.grad_norm}, {"utterances", l.utterances}, {"skipped", l.skipped}};
}

TrainOutcome train_model(const RunConfig& cfg, const Dataset& full, const TrainOptions& opt) {
  check_dataset(cfg, full);
  const Dataset sub = cfg.train_fraction < 1.0 ? with_train_fraction(full, cfg.train_fraction) : Dataset{};
  const Dataset& ds = cfg.train_fraction < 1.0 ? sub : full;
  const std::string fp = config_fingerprint(cfg);

  TrainOutcome out;
  out.model = Model::init(cfg.model, cfg.seed);
  out.model.fit_tables(ds, cfg.seed);
  AdamState adam;
  std::size_t start = 0;
  if (opt.resume && !opt.run_dir.empty()) {
    if (auto p = latest_checkpoint(opt.run_dir)) {
      Checkpoint ck = load_checkpoint(*p);
      if (ck.fingerprint != fp) {
        throw DataError("checkpoint " + *p + " has fingerprint " + ck.fingerprint + ", config has " + fp);
      }
      out.model = std::move(ck.model);
      adam = std::move(ck.adam);
      start = ck.step;
      out.last_checkpoint = *p;
    }
  }

  std::ofstream log_out;
  if (!opt.run_dir.empty()) {
    fs::create_directories(opt.run_dir);
    const fs::path log_path = fs::path(opt.run_dir) / "train_log.jsonl";
    std::vector<std::string> kept;
    if (start > 0) {
      std::ifstream in(log_path);
      for (std::string line; std::getline(in, line);) {
        if (!line.empty() && json::parse(line).at("step").get<std::size_t>() < start) kept.push_back(line);
      }
    }
    log_out.open(log_path, std::ios::trunc);
    for (const auto& line : kept) log_out << line << '\n';
    if (!log_out) throw DataError("cannot write " + log_path.string());
  }

  Trainer trainer(out.model, ds, cfg.train);
  trainer.set_threads(opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency()));
  trainer.set_state(start, std::move(adam));
  try {
    trainer.run(cfg.train.steps, [&](const StepLog& l) {
      if (log_out.is_open()) log_out << step_log_json(l, cfg.model.reg).dump() << '\n' << std::flush;
      if (opt.on_step) opt.on_step(l);
      const std::size_t done = l.step + 1;
      if (!opt.run_dir.empty() && (done % cfg.checkpoint_every == 0 || done == cfg.train.steps)) {
        const std::string dir = (fs::path(opt.run_dir) / checkpoint_name(done)).string();
        save_checkpoint(dir, cfg, out.model, trainer.adam(), done);
        out.last_checkpoint = dir;
      }
    });
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) +
                       (out.last_checkpoint.empty() ? "; no checkpoint was written"
                                                    : "; last good checkpoint: " + out.last_checkpoint));
  }
  out.adam = trainer.adam();
  out.step = trainer.step();
  return out;
}

double latent_variance_ratio(const Model& model, const Dataset& ds, const std::vector<std::size_t>& indices,
                             double max_jitter_s) {
  std::vector<Tensor> latents;
  std::vector<std::string> sessions;
  for (std::size_t i : indices) {
    const Utterance u = nominal_window(ds.utterances.at(i), max_jitter_s);
    latents.push_back(latent_of(model, u.neural));
    sessions.push_back(u.session_id);
  }
  return session_variance_ratio(latents, sessions);
}

namespace {

ConditionReport run_condition(const std::string& name, const RunConfig& cfg, const Model& model,
                              const Dataset& ds, std::shared_ptr<const ArpaModel> lm) {
  ConditionReport c;
  c.condition = name;
  c.transcripts = decode_utterances(model, ds, ds.indices("test"), decode_config(cfg, std::move(lm)),
                                    cfg.train.max_jitter_s);
  c.wer = transcript_wer(c.transcripts);
  c.cer = transcript_cer(c.transcripts);
  return c;
}

json rate_json(const ErrorRate& r) {
  return json{{"rate", r.rate},
              {"distance", r.edits.distance},
              {"sub", r.edits.sub},
              {"del", r.edits.del},
              {"ins", r.edits.ins},
              {"ref_tokens", r.ref_tokens}};
}

const char* side_name(CutoffSide s) { return s == CutoffSide::kOnset ? "onset" : "offset"; }

}  // namespace

ModelReport evaluate_model(const RunConfig& cfg, const Model& model, std::size_t step, const Dataset& ds,
                           const EvaluateOptions& opt) {
  check_dataset(cfg, ds);
  ModelReport r;
  r.fingerprint = config_fingerprint(cfg);
  r.seed = cfg.seed;
  r.step = step;
  std::shared_ptr<const ArpaModel> general = opt.general_lm;
  if (!general && cfg.decode.lm == LmSource::kFile) general = configured_lm(cfg, ds);
  if (general) check_lm_vocab(*general, decode_config(cfg, nullptr).alphabet);
  const auto task = task_lm(cfg, ds);

  r.conditions.push_back(run_condition("NL", cfg, model, ds, nullptr));
  if (general) r.conditions.push_back(run_condition("L1", cfg, model, ds, general));
  r.conditions.push_back(run_condition("L2", cfg, model, ds, task));

  std::shared_ptr<const ArpaModel> primary;
  if (cfg.decode.lm == LmSource::kTask) primary = task;
  if (cfg.decode.lm == LmSource::kFile) primary = general;
  const DecodeConfig dc = decode_config(cfg, primary);
  const auto test = ds.indices("test");
  if (opt.cutoffs) {
    for (CutoffSide side : {CutoffSide::kOnset, CutoffSide::kOffset}) {
      r.cutoffs.push_back(cutoff_curve(model, ds, test, side, cfg.eval.cutoff_steps_s, dc, cfg.train.max_jitter_s));
    }
  }
  if (opt.incremental) {
    for (std::size_t k = 0; k < std::min(cfg.eval.stream_trials, test.size()); ++k) {
      IncrementalTrial t = incremental_trial(model, ds.utterances[test[k]], dc, cfg.eval.stream_step_s,
                                             cfg.train.max_jitter_s);
      t.index = test[k];
      r.incremental.push_back(std::move(t));
    }
  }
  try {
    r.session_variance_ratio = latent_variance_ratio(model, ds, test, cfg.train.max_jitter_s);
  } catch (const ParameterError&) {
    r.session_variance_ratio = std::numeric_limits<double>::quiet_NaN();
  } catch (const DataError&) {
    r.session_variance_ratio = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

json report_json(const ModelReport& r) {
  json conditions = json::array();
  for (const auto& c : r.conditions) {
    json ts = json::array();
    for (const auto& t : c.transcripts) {
      ts.push_back({{"index", t.index},
                    {"session", t.session},
                    {"reference", t.reference},
                    {"hypothesis", t.hypothesis},
                    {"score", t.score}});
    }
    conditions.push_back({{"condition", c.condition}, {"wer", rate_json(c.wer)}, {"cer", rate_json(c.cer)},
                          {"transcripts", ts}});
  }
  json cutoffs = json::array();
  for (const auto& c : r.cutoffs) {
    json pts = json::array();
    for (const auto& p : c.points) {
      pts.push_back({{"cutoff_s", p.cutoff_s}, {"wer", p.wer}, {"decoded", p.decoded}, {"skipped", p.skipped}});
    }
    cutoffs.push_back({{"side", side_name(c.side)}, {"points", pts}, {"decreases", c.decreases},
                       {"non_decreasing", c.non_decreasing()}});
  }
  json inc = json::array();
  for (const auto& t : r.incremental) {
    json rows = json::array();
    for (const auto& row : t.rows) rows.push_back({{"time_s", row.time_s}, {"text", row.text}});
    inc.push_back({{"index", t.index}, {"reference", t.reference}, {"rows", rows}});
  }
  return json{{"fingerprint", r.fingerprint},
              {"seed", r.seed},
              {"step", r.step},
              {"conditions", conditions},
              {"cutoffs", cutoffs},
              {"incremental", inc},
              {"session_variance_ratio", r.session_variance_ratio}};
}

std::string incremental_text(const IncrementalTrial& t) {
  std::ostringstream o;
  o << "utterance " << t.index << "  reference: " << t.reference << '\n';
  o << "  time_s  hypothesis\n";
  char buf[32];
  for (const auto& row : t.rows) {
    std::snprintf(buf, sizeof buf, "  %6.2f  ", row.time_s);
    o << buf << row.text << '\n';
  }
  return o.str();
}

void write_report_files(const ModelReport& r, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path root(dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(root / name, std::ios::binary);
    out << text;
    if (!out) throw DataError("cannot write " + (root / name).string());
  };
  write("report.json", report_json(r).dump(2) + "\n");
  std::ostringstream wer_csv;
  wer_csv << "condition,wer,cer,sub,del,ins,ref_words\n";
  for (const auto& c : r.conditions) {
    wer_csv << c.condition << ',' << c.wer.rate << ',' << c.cer.rate << ',' << c.wer.edits.sub << ','
            << c.wer.edits.del << ',' << c.wer.edits.ins << ',' << c.wer.ref_tokens << '\n';
  }
  write("wer.csv", wer_csv.str());
  if (!r.cutoffs.empty()) {
    std::vector<Series> series;
    for (const auto& c : r.cutoffs) {
      Series s{side_name(c.side), {}, {}};
      for (const auto& p : c.points) {
        s.x.push_back(p.cutoff_s);
        s.y.push_back(p.wer);
      }
      series.push_back(std::move(s));
    }
    write("cutoff.csv", series_csv(series, "cutoff_s"));
    write("cutoff.svg", svg_line_chart("WER after cutting the trial", "cutoff (s)", "WER", series));
  }
  if (!r.incremental.empty()) {
    std::string text;
    for (const auto& t : r.incremental) text += incremental_text(t) + "\n";
    write("incremental.txt", text);
  }
}

std::string CellSpec::name() const {
  std::ostringstream o;
  o << "reg=" << reg << " cal=" << (calibration ? "on" : "off") << " frac=" << train_fraction << " seed=" << seed;
  return o.str();
}

std::vector<RegTarget> reg_condition_targets(const std::string& reg) {
  if (reg == "none") return {};
  if (reg == "mfcc") return {RegTarget::kMfcc};
  if (reg == "akt") return {RegTarget::kAkt};
  if (reg == "mfcc+akt") return {RegTarget::kMfcc, RegTarget::kAkt};
  throw UsageError("unknown regularization condition '" + reg + "'");
}

RunConfig cell_config(const RunConfig& base, const CellSpec& cell) {
  RunConfig c = base;
  c.seed = cell.seed;
  c.data.seed = cell.seed;
  c.model.reg.targets = reg_condition_targets(cell.reg);
  if (cell.calibration) c.model.reg.targets.push_back(RegTarget::kSession);
  c.train_fraction = cell.train_fraction;
  c.finalize();
  return c;
}

CellResult run_cell(const RunConfig& base, const CellSpec& cell, std::size_t threads) {
  CellResult r;
  r.cell = cell;
  try {
    const RunConfig cfg = cell_config(base, cell);
    r.fingerprint = config_fingerprint(cfg);
    const Dataset ds = generate_dataset(cfg.data);
    TrainOptions opt;
    opt.threads = threads;
    const TrainOutcome t = train_model(cfg, ds, opt);
    EvaluateOptions eo;
    eo.cutoffs = false;
    eo.incremental = false;
    const ModelReport rep = evaluate_model(cfg, t.model, t.step, ds, eo);
    for (const auto& c : rep.conditions) {
      r.wer[c.condition] = c.wer;
      r.cer[c.condition] = c.cer;
    }
    r.session_variance_ratio = rep.session_variance_ratio;
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

json cell_json(const CellResult& r) {
  json wer = json::object(), cer = json::object();
  for (const auto& [k, v] : r.wer) wer[k] = rate_json(v);
  for (const auto& [k, v] : r.cer) cer[k] = rate_json(v);
  return json{{"name", r.cell.name()},
              {"reg", r.cell.reg},
              {"calibration", r.cell.calibration},
              {"train_fraction", r.cell.train_fraction},
              {"seed", r.cell.seed},
              {"fingerprint", r.fingerprint},
              {"ok", r.ok},
              {"error", r.error},
              {"wer", wer},
              {"cer", cer},
              {"session_variance_ratio", r.session_variance_ratio}};
}

std::vector<Series> fraction_series(const std::vector<CellResult>& cells) {
  std::vector<Series> out;
  for (const auto& c : cells) {
    if (!c.ok || !c.wer.count("L2")) continue;
    std::ostringstream name;
    name << c.cell.reg << (c.cell.calibration ? "+cal" : "") << " s" << c.cell.seed;
    auto it = std::find_if(out.begin(), out.end(), [&](const Series& s) { return s.name == name.str(); });
    if (it == out.end()) {
      out.push_back({name.str(), {}, {}});
      it = out.end() - 1;
    }
    it->x.push_back(c.cell.train_fraction);
    it->y.push_back(c.wer.at("L2").rate);
  }
  return out;
}

}  // namespace neurotext
