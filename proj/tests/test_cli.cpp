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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "neurotext/eval.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "neurotext_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    std::ofstream(d / "tiny.json") << R"({
      "data": {"corpus": {"vocab_size": 8, "train_sentences": 8, "test_sentences": 3}},
      "model": {"encoder": {"widths": [4, 4, 4], "lstm_hidden": 4}},
      "train": {"steps": 4, "batch_size": 4, "checkpoint_every": 2},
      "decode": {"beam_width": 4},
      "eval": {"cutoff_steps_s": [0, 0.5], "stream_trials": 1}
    })";
    return d;
  }();
  return dir;
}

Run cli(const std::string& args) {
  const std::string cmd = std::string("\"") + NEUROTEXT_CLI + "\" --config \"" + (work_dir() / "tiny.json").string() +
                          "\" " + args + " 2> \"" + (work_dir() / "stderr.txt").string() + "\"";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string last_stderr() {
  std::ifstream in(work_dir() / "stderr.txt");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Shared fixture: data and a 4-step run.
const fs::path& prepared() {
  static const fs::path d = [] {
    const fs::path w = work_dir();
    REQUIRE(cli("gen-data --out " + q(w / "data")).code == 0);
    REQUIRE(cli("train --data " + q(w / "data") + " --out " + q(w / "run")).code == 0);
    return w;
  }();
  return d;
}

std::vector<std::vector<std::string>> rows(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string x; std::getline(ls, x, '\t');) f.push_back(x);
    if (line.back() == '\t') f.emplace_back();
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(cli("decode").code == 1);
  CHECK(cli("no-such-command").code == 1);
  CHECK(cli("--bogus gen-data --out x").code == 1);
}

TEST_CASE("non-empty output directory needs --force") {
  const fs::path w = prepared();
  const Run r = cli("gen-data --out " + q(w / "data"));
  CHECK(r.code == 1);
  CHECK(last_stderr().find("--force") != std::string::npos);
  CHECK(cli("gen-data --out " + q(w / "data2") + " --force").code == 0);
  CHECK(cli("gen-data --out " + q(w / "data2") + " --force").code == 0);
}

TEST_CASE("corrupted tensor file is reported by path") {
  const fs::path w = prepared();
  fs::remove_all(w / "broken");
  fs::copy(w / "run", w / "broken", fs::copy_options::recursive);
  fs::path ckpt;
  for (const auto& e : fs::directory_iterator(w / "broken")) {
    if (e.is_directory()) ckpt = e.path();
  }
  REQUIRE(!ckpt.empty());
  {
    std::fstream f(ckpt / "params.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  const Run r = cli("decode --checkpoint " + q(ckpt) + " --data " + q(w / "data"));
  CHECK(r.code == 2);
  CHECK(last_stderr().find("params.bin") != std::string::npos);
}

TEST_CASE("--no-lm equals zero LM weight") {
  const fs::path w = prepared();
  const std::string base = "decode --checkpoint " + q(w / "run") + " --data " + q(w / "data");
  const Run a = cli(base + " --no-lm");
  const Run b = cli(base + " --lm-weight 0");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.out == b.out);
  CHECK(rows(a.out).size() == 3);
}

TEST_CASE("n-best lists are sorted by score") {
  const fs::path w = prepared();
  const Run r = cli("decode --checkpoint " + q(w / "run") + " --data " + q(w / "data") + " --nbest 4");
  REQUIRE(r.code == 0);
  const auto rs = rows(r.out);
  REQUIRE(rs.size() >= 3);
  for (std::size_t i = 1; i < rs.size(); ++i) {
    REQUIRE(rs[i].size() == 4);
    if (rs[i][0] == rs[i - 1][0]) {
      CHECK(std::stoul(rs[i][1]) == std::stoul(rs[i - 1][1]) + 1);
      CHECK(std::stod(rs[i][2]) <= std::stod(rs[i - 1][2]));
    } else {
      CHECK(rs[i][1] == "1");
    }
  }
}

TEST_CASE("stream prints one row per step and ends with the batch result") {
  const fs::path w = prepared();
  const Run s = cli("stream --checkpoint " + q(w / "run") + " --data " + q(w / "data") + " --index 0");
  REQUIRE(s.code == 0);
  const auto rs = rows(s.out);
  REQUIRE(!rs.empty());
  const Run d = cli("decode --checkpoint " + q(w / "run") + " --data " + q(w / "data") + " --index 0");
  REQUIRE(d.code == 0);
  CHECK(rs.back().back() == rows(d.out).front().back());
}

TEST_CASE("eval writes reports and refuses to overwrite") {
  const fs::path w = prepared();
  const std::string args = "eval --checkpoint " + q(w / "run") + " --data " + q(w / "data") + " --out " + q(w / "eval");
  REQUIRE(cli(args).code == 0);
  for (const char* f : {"report.json", "wer.csv", "cutoff.csv", "cutoff.svg", "incremental.txt"}) {
    CHECK(fs::exists(w / "eval" / "model-0" / f));
  }
  CHECK(fs::exists(w / "eval" / "summary.json"));
  CHECK(cli(args).code == 1);
}
