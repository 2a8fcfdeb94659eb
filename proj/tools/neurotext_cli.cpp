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

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "neurotext/arpa.hpp"
#include "neurotext/blob.hpp"
#include "neurotext/checkpoint.hpp"
#include "neurotext/config.hpp"
#include "neurotext/errors.hpp"
#include "neurotext/pipeline.hpp"

namespace fs = std::filesystem;
using namespace neurotext;
using json = nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::size_t threads = 0;
};

// --config, then $NEUROTEXT_CONFIG, then fallback_path, then the preset.
RunConfig load_run_config(const Common& c, const std::string& fallback_path = "") {
  std::string path = c.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("NEUROTEXT_CONFIG")) path = env;
  }
  if (path.empty()) path = fallback_path;
  RunConfig cfg = path.empty() ? benchmark_config() : load_config(path, benchmark_config());
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.data.seed = *c.seed;
  }
  if (c.steps) cfg.train.steps = *c.steps;
  cfg.finalize();
  return cfg;
}

void echo_config(const RunConfig& cfg) {
  std::cerr << "# config " << config_fingerprint(cfg) << ' ' << config_to_json(cfg).dump() << '\n';
}

void prepare_out_dir(const std::string& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError(dir + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw UsageError(dir + " is not empty; pass --force to overwrite");
      fs::remove_all(dir);
    }
  }
  fs::create_directories(dir);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + p.string());
}

int cmd_gen_data(const Common& common, const std::string& out, bool force) {
  const RunConfig cfg = load_run_config(common);
  echo_config(cfg);
  prepare_out_dir(out, force);
  const Dataset ds = generate_dataset(cfg.data);
  save_dataset(ds, out);
  double seconds = 0.0;
  for (const auto& u : ds.utterances) seconds += static_cast<double>(u.frames()) / u.sample_rate;
  std::printf("dataset %s\n", dataset_fingerprint(ds.spec).c_str());
  std::printf("sessions %zu\n", ds.sessions.size());
  std::printf("utterances %zu (train %zu, test %zu)\n", ds.utterances.size(), ds.indices("train").size(),
              ds.indices("test").size());
  std::printf("hours %.4f\n", seconds / 3600.0);
  return 0;
}

int cmd_train_lm(const Common& common, const std::string& data, const std::string& text_path,
                 const std::string& out, std::optional<std::size_t> order, std::optional<double> discount) {
  RunConfig cfg = load_run_config(common);
  if (order) cfg.lm.order = *order;
  if (discount) cfg.lm.discount = *discount;
  cfg.finalize();
  echo_config(cfg);
  std::vector<std::string> sentences;
  if (!text_path.empty()) {
    std::ifstream in(text_path);
    if (!in) throw DataError("cannot open " + text_path);
    for (std::string line; std::getline(in, line);) {
      if (!split_words(line).empty()) sentences.push_back(line);
    }
  } else {
    sentences = load_dataset(data).texts("train");
  }
  const ArpaModel lm = train_ngram(sentences, cfg.lm.order, cfg.lm.discount);
  save_arpa(lm, out);
  std::printf("lm order %zu, %zu sentences, %zu unigrams -> %s\n", cfg.lm.order, sentences.size(), lm.count(1),
              out.c_str());
  return 0;
}

int cmd_train(const Common& common, const std::string& data, const std::string& out, bool resume, bool force) {
  const fs::path stored = fs::path(out) / "config.json";
  const RunConfig cfg = load_run_config(common, resume && fs::exists(stored) ? stored.string() : "");
  echo_config(cfg);
  const Dataset ds = load_dataset(data);
  check_dataset(cfg, ds);
  if (!resume) prepare_out_dir(out, force);
  fs::create_directories(out);
  save_config(cfg, (fs::path(out) / "config.json").string());
  TrainOptions opt;
  opt.run_dir = out;
  opt.resume = resume;
  opt.threads = common.threads;
  opt.on_step = [&](const StepLog& l) {
    std::printf("step %zu lr %.6f loss %.4f ctc %.4f mfcc %.4f akt %.4f joint %.4f session %.4f decay %.4f gnorm %.3f\n",
                l.step, l.lr, l.loss, l.ctc, l.mfcc, l.akt, l.joint, l.session, l.decay, l.grad_norm);
    std::fflush(stdout);
  };
  const TrainOutcome t = train_model(cfg, ds, opt);
  std::printf("trained to step %zu; checkpoint %s\n", t.step, t.last_checkpoint.c_str());
  return 0;
}

struct DecodeFlags {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::optional<std::size_t> index;
  std::string posteriors;
  std::string lm_path;
  bool no_lm = false;
  std::optional<std::size_t> beam_width;
  std::optional<double> lm_weight;
  std::optional<std::size_t> nbest;
};

Checkpoint open_checkpoint(const std::string& path) {
  if (fs::exists(fs::path(path) / "manifest.json")) return load_checkpoint(path);
  if (auto latest = latest_checkpoint(path)) return load_checkpoint(*latest);
  throw DataError("no checkpoint found at " + path);
}

// The checkpoint's config with decode flags applied.
RunConfig decode_run_config(const Checkpoint& ck, const DecodeFlags& f) {
  RunConfig cfg = ck.config;
  if (f.beam_width) cfg.decode.beam_width = *f.beam_width;
  if (f.lm_weight) cfg.decode.lm_weight = *f.lm_weight;
  if (f.nbest) cfg.decode.nbest = *f.nbest;
  if (!f.lm_path.empty()) {
    cfg.decode.lm = LmSource::kFile;
    cfg.decode.lm_path = f.lm_path;
  }
  if (f.no_lm) cfg.decode.lm = LmSource::kNone;
  cfg.finalize();
  return cfg;
}

std::shared_ptr<const ArpaModel> decode_lm(const RunConfig& cfg, const Dataset* ds) {
  if (cfg.decode.lm == LmSource::kTask && !ds) throw UsageError("the task LM needs --data");
  if (cfg.decode.lm == LmSource::kTask) return task_lm(cfg, *ds);
  if (cfg.decode.lm == LmSource::kFile) return configured_lm(cfg, Dataset{});
  return nullptr;
}

void print_hyps(std::size_t index, const std::vector<Hypothesis>& hyps, std::size_t nbest) {
  if (hyps.empty()) {
    std::printf("%zu\t-inf\t\n", index);
    return;
  }
  for (std::size_t k = 0; k < std::min(nbest, hyps.size()); ++k) {
    if (nbest > 1) {
      std::printf("%zu\t%zu\t%.6f\t%s\n", index, k + 1, hyps[k].score, hyps[k].text.c_str());
    } else {
      std::printf("%zu\t%.6f\t%s\n", index, hyps[k].score, hyps[k].text.c_str());
    }
  }
}

int cmd_decode(const DecodeFlags& f) {
  const Checkpoint ck = open_checkpoint(f.checkpoint);
  const RunConfig cfg = decode_run_config(ck, f);
  echo_config(cfg);
  std::optional<Dataset> ds;
  if (!f.data.empty()) {
    ds = load_dataset(f.data);
    check_dataset(ck.config, *ds);
  }
  const auto lm = decode_lm(cfg, ds ? &*ds : nullptr);
  const DecodeConfig dc = decode_config(cfg, lm);
  if (!f.posteriors.empty()) {
    const Tensor t = load_blob(f.posteriors);
    print_hyps(0, beam_decode(PosteriorSequence(t), dc), cfg.decode.nbest);
    return 0;
  }
  if (!ds) throw UsageError("decode needs --data or --posteriors");
  std::vector<std::size_t> indices = f.index ? std::vector<std::size_t>{*f.index} : ds->indices(f.split);
  std::vector<std::string> refs, hyps;
  for (std::size_t i : indices) {
    if (i >= ds->utterances.size()) throw UsageError("utterance index " + std::to_string(i) + " out of range");
    const Utterance u = nominal_window(ds->utterances[i], cfg.train.max_jitter_s);
    const auto h = beam_decode(posteriors(ck.model, u.neural), dc);
    print_hyps(i, h, cfg.decode.nbest);
    refs.push_back(u.text);
    hyps.push_back(h.empty() ? std::string() : h.front().text);
  }
  const ErrorRate w = wer(refs, hyps), c = cer(refs, hyps);
  std::fprintf(stderr, "# utterances %zu  WER %.4f (S %zu D %zu I %zu / %zu)  CER %.4f\n", refs.size(), w.rate,
               w.edits.sub, w.edits.del, w.edits.ins, w.ref_tokens, c.rate);
  return 0;
}

int cmd_stream(const DecodeFlags& f, double step_s) {
  const Checkpoint ck = open_checkpoint(f.checkpoint);
  const RunConfig cfg = decode_run_config(ck, f);
  echo_config(cfg);
  if (f.data.empty()) throw UsageError("stream needs --data");
  const Dataset ds = load_dataset(f.data);
  check_dataset(ck.config, ds);
  const std::size_t index = f.index ? *f.index : ds.indices(f.split).at(0);
  if (index >= ds.utterances.size()) throw UsageError("utterance index " + std::to_string(index) + " out of range");
  const auto lm = decode_lm(cfg, &ds);
  const IncrementalTrial t = incremental_trial(ck.model, ds.utterances[index], decode_config(cfg, lm), step_s,
                                               cfg.train.max_jitter_s);
  std::printf("# utterance %zu reference: %s\n", index, t.reference.c_str());
  for (const auto& row : t.rows) {
    std::printf("%.2f\t%s\n", row.time_s, row.text.c_str());
    std::fflush(stdout);
  }
  return 0;
}

int cmd_eval(const Common& common, const std::vector<std::string>& checkpoints, const std::string& data,
             const std::string& out, const std::string& general_lm, const std::string& suite, bool force) {
  prepare_out_dir(out, force);
  const auto t0 = std::chrono::steady_clock::now();
  json summary{{"format", "neurotext-eval"}, {"version", 1}};
  json timing = json::object();
  int status = 0;
  if (suite == "ablation") {
    const RunConfig cfg = load_run_config(common);
    echo_config(cfg);
    summary["suite"] = "ablation";
    summary["base_fingerprint"] = config_fingerprint(cfg);
    summary["base_config"] = config_to_json(cfg);
    std::vector<CellResult> cells;
    json rows = json::array();
    std::ostringstream csv;
    csv << "reg,calibration,train_fraction,seed,fingerprint,ok,wer_nl,wer_l2,cer_nl,cer_l2,variance_ratio\n";
    for (std::uint64_t seed : cfg.eval.seeds) {
      for (double frac : cfg.eval.train_fractions) {
        for (const auto& reg : cfg.eval.reg_conditions) {
          for (bool cal : cfg.eval.calibration) {
            const CellSpec spec{reg, cal, frac, seed};
            const auto c0 = std::chrono::steady_clock::now();
            std::fprintf(stderr, "# cell %s\n", spec.name().c_str());
            CellResult r = run_cell(cfg, spec, common.threads);
            timing[spec.name()] = std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();
            if (!r.ok) {
              status = kExitData;
              std::fprintf(stderr, "# cell %s failed: %s\n", spec.name().c_str(), r.error.c_str());
            }
            rows.push_back(cell_json(r));
            auto rate = [&](const std::map<std::string, ErrorRate>& m, const char* k) {
              return m.count(k) ? m.at(k).rate : std::nan("");
            };
            csv << reg << ',' << (cal ? 1 : 0) << ',' << frac << ',' << seed << ',' << r.fingerprint << ','
                << (r.ok ? 1 : 0) << ',' << rate(r.wer, "NL") << ',' << rate(r.wer, "L2") << ','
                << rate(r.cer, "NL") << ',' << rate(r.cer, "L2") << ',' << r.session_variance_ratio << '\n';
            cells.push_back(std::move(r));
          }
        }
      }
    }
    summary["cells"] = rows;
    write_text(fs::path(out) / "suite.csv", csv.str());
    const auto series = fraction_series(cells);
    write_text(fs::path(out) / "fractions.csv", series_csv(series, "train_fraction"));
    write_text(fs::path(out) / "fractions.svg",
               svg_line_chart("WER by training data", "fraction of training sentences", "WER (task LM)", series));
  } else if (suite == "model") {
    if (checkpoints.empty()) throw UsageError("eval needs at least one --checkpoint");
    if (data.empty()) throw UsageError("eval needs --data");
    const Dataset ds = load_dataset(data);
    EvaluateOptions opt;
    if (!general_lm.empty()) opt.general_lm = std::make_shared<const ArpaModel>(load_arpa(general_lm));
    summary["suite"] = "model";
    json models = json::array();
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
      const auto c0 = std::chrono::steady_clock::now();
      const Checkpoint ck = open_checkpoint(checkpoints[k]);
      echo_config(ck.config);
      check_dataset(ck.config, ds);
      const ModelReport r = evaluate_model(ck.config, ck.model, ck.step, ds, opt);
      const std::string sub = "model-" + std::to_string(k);
      write_report_files(r, (fs::path(out) / sub).string());
      json entry{{"dir", sub}, {"fingerprint", r.fingerprint}, {"step", r.step}, {"seed", r.seed}};
      for (const auto& c : r.conditions) entry["wer"][c.condition] = c.wer.rate;
      models.push_back(entry);
      timing[sub] = std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();
      for (const auto& c : r.conditions) {
        std::printf("%s %s WER %.4f CER %.4f\n", sub.c_str(), c.condition.c_str(), c.wer.rate, c.cer.rate);
      }
    }
    summary["models"] = models;
  } else {
    throw UsageError("unknown suite '" + suite + "' (model or ablation)");
  }
  write_text(fs::path(out) / "summary.json", summary.dump(2) + "\n");
  timing["total_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(fs::path(out) / "timing.json", timing.dump(2) + "\n");
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Character decoding from grid neural signals"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "JSON run config (default: $NEUROTEXT_CONFIG, else the benchmark preset)");
  app.add_option("--seed", common.seed, "Override the data and training seed");
  app.add_option("--steps", common.steps, "Override train.steps");
  app.add_option("--threads", common.threads, "Worker threads (0: all cores)");

  std::string out, data, text_path, general_lm, suite = "model";
  bool force = false, resume = false;
  std::optional<std::size_t> order;
  std::optional<double> discount;
  std::vector<std::string> checkpoints;
  DecodeFlags df;
  double step_s = 0.2;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic dataset");
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_flag("--force", force, "Replace a non-empty output directory");

  auto* tlm = app.add_subcommand("train-lm", "Train an n-gram LM and write ARPA");
  auto* src = tlm->add_option_group("source");
  src->add_option("--data", data, "Dataset directory (training sentences)");
  src->add_option("--text", text_path, "Text file, one sentence per line");
  src->require_option(1);
  tlm->add_option("--out", out, "ARPA output file")->required();
  tlm->add_option("--order", order, "N-gram order (1-4)");
  tlm->add_option("--discount", discount, "Kneser-Ney discount");

  auto* tr = app.add_subcommand("train", "Train a model with checkpoints");
  tr->add_option("--data", data, "Dataset directory")->required();
  tr->add_option("--out", out, "Run directory")->required();
  tr->add_flag("--resume", resume, "Continue from the latest checkpoint in --out");
  tr->add_flag("--force", force, "Replace a non-empty run directory");

  auto add_decode_flags = [&](CLI::App* s) {
    s->add_option("--checkpoint", df.checkpoint, "Checkpoint or run directory")->required();
    s->add_option("--data", df.data, "Dataset directory");
    s->add_option("--split", df.split, "Split to decode");
    s->add_option("--index", df.index, "Single utterance index");
    s->add_option("--lm", df.lm_path, "ARPA LM file");
    s->add_flag("--no-lm", df.no_lm, "Decode without a language model");
    s->add_option("--beam-width", df.beam_width, "Beam width");
    s->add_option("--lm-weight", df.lm_weight, "LM weight");
  };
  auto* dec = app.add_subcommand("decode", "Decode utterances or a posterior file");
  add_decode_flags(dec);
  dec->add_option("--posteriors", df.posteriors, "Tensor file of log posteriors (frames x 29)");
  dec->add_option("--nbest", df.nbest, "Hypotheses per utterance");

  auto* st = app.add_subcommand("stream", "Incremental decoding of one utterance");
  add_decode_flags(st);
  st->add_option("--step", step_s, "Increment in seconds");

  auto* ev = app.add_subcommand("eval", "Evaluation reports");
  ev->add_option("--checkpoint", checkpoints, "Checkpoint or run directory (repeatable)");
  ev->add_option("--data", data, "Dataset directory");
  ev->add_option("--out", out, "Report directory")->required();
  ev->add_option("--general-lm", general_lm, "ARPA file for the general-domain condition");
  ev->add_option("--suite", suite, "model (default) or ablation");
  ev->add_flag("--force", force, "Replace a non-empty report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_data(common, out, force);
    if (*tlm) return cmd_train_lm(common, data, text_path, out, order, discount);
    if (*tr) return cmd_train(common, data, out, resume, force);
    if (*dec) return cmd_decode(df);
    if (*st) return cmd_stream(df, step_s);
    if (*ev) return cmd_eval(common, checkpoints, data, out, general_lm, suite, force);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ParameterError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
