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

#include "neurotext/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "neurotext/blob.hpp"
#include "neurotext/errors.hpp"
#include "neurotext/hash.hpp"

namespace neurotext {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct BlobFile {
  std::string name;
  std::ostringstream bytes;
  json index = json::array();

  void add(const std::string& tensor, const Tensor& t, BlobDtype dtype) {
    std::ostringstream one;
    write_blob(one, t, dtype);
    const std::string b = one.str();
    index.push_back({{"name", tensor},
                     {"offset", static_cast<std::uint64_t>(bytes.tellp())},
                     {"bytes", b.size()},
                     {"shape", t.shape()},
                     {"checksum", hex64(fnv1a(b))}});
    bytes << b;
  }

  void write(const fs::path& dir) const {
    std::ofstream out(dir / name, std::ios::binary);
    const std::string b = bytes.str();
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
    if (!out) throw DataError("cannot write " + (dir / name).string());
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Tensors of one file, checked against their recorded checksums.
std::vector<std::pair<std::string, Tensor>> read_indexed(const fs::path& dir, const json& entry) {
  const std::string name = entry.at("file");
  const std::string bytes = read_file(dir / name);
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& rec : entry.at("tensors")) {
    const std::string tensor = rec.at("name");
    const std::uint64_t off = rec.at("offset"), len = rec.at("bytes");
    if (off + len > bytes.size()) throw DataError(name + ": tensor '" + tensor + "' runs past end of file");
    const std::string b = bytes.substr(off, len);
    if (hex64(fnv1a(b)) != rec.at("checksum").get<std::string>()) {
      throw DataError(name + ": checksum mismatch for tensor '" + tensor + "'");
    }
    std::istringstream in(b);
    try {
      out.emplace_back(tensor, read_blob(in));
    } catch (const DataError& e) {
      throw DataError(name + ": tensor '" + tensor + "': " + e.what());
    }
  }
  return out;
}

std::string manifest_hash(json manifest) {
  manifest.erase("manifest_hash");
  return hex64(fnv1a(manifest.dump()));
}

Tensor vec_tensor(const std::vector<double>& v) { return Tensor({v.size()}, v); }

}  // namespace

std::string checkpoint_name(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step-%06zu", step);
  return buf;
}

void save_checkpoint(const std::string& dir, const RunConfig& config, const Model& model,
                     const AdamState& adam, std::size_t step) {
  BlobFile params{"params.bin"}, moments{"moments.bin"}, tables{"tables.bin"};
  for (const auto& e : model.params.entries()) {
    for (double v : e.value.values()) {
      if (static_cast<double>(static_cast<float>(v)) != v) {
        throw UsageError("parameter '" + e.name + "' is not float32 representable");
      }
    }
    params.add(e.name, e.value, BlobDtype::kFloat32);
  }
  const auto& entries = model.params.entries();
  for (std::size_t i = 0; i < adam.m.size(); ++i) {
    moments.add("m/" + entries.at(i).name, vec_tensor(adam.m[i]), BlobDtype::kFloat64);
    moments.add("v/" + entries.at(i).name, vec_tensor(adam.v[i]), BlobDtype::kFloat64);
  }
  for (const auto& [id, v] : model.sessions.entries()) tables.add("session/" + id, vec_tensor(v), BlobDtype::kFloat64);
  if (!model.joint.mean.empty()) {
    tables.add("joint/mean", vec_tensor(model.joint.mean), BlobDtype::kFloat64);
    tables.add("joint/basis", model.joint.basis, BlobDtype::kFloat64);
  }

  json files = json::array();
  for (const BlobFile* f : {&params, &moments, &tables}) files.push_back({{"file", f->name}, {"tensors", f->index}});
  json manifest{{"format", "neurotext-checkpoint"},
                {"version", kCheckpointVersion},
                {"fingerprint", config_fingerprint(config)},
                {"step", step},
                {"config", config_to_json(config)},
                {"adam", {{"beta1", adam.beta1}, {"beta2", adam.beta2}, {"eps", adam.eps}, {"step", adam.step}}},
                {"sessions", {{"dim", model.sessions.dim()}, {"window", model.sessions.window()}}},
                {"files", files}};
  manifest["manifest_hash"] = manifest_hash(manifest);

  const fs::path target(dir);
  const fs::path tmp = target.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  params.write(tmp);
  moments.write(tmp);
  tables.write(tmp);
  {
    std::ofstream out(tmp / "manifest.json");
    out << manifest.dump(2) << '\n';
    if (!out) throw DataError("cannot write " + (tmp / "manifest.json").string());
  }
  fs::remove_all(target);
  fs::rename(tmp, target);
}

Checkpoint load_checkpoint(const std::string& dir) {
  const fs::path root(dir);
  json manifest;
  try {
    manifest = json::parse(read_file(root / "manifest.json"));
  } catch (const json::exception& e) {
    throw DataError((root / "manifest.json").string() + ": " + e.what());
  }
  try {
    if (manifest.at("format") != "neurotext-checkpoint") throw DataError("not a checkpoint manifest");
    if (manifest.at("version") != kCheckpointVersion) {
      throw DataError("unsupported checkpoint version " + manifest.at("version").dump());
    }
    if (manifest.at("manifest_hash").get<std::string>() != manifest_hash(manifest)) {
      throw DataError("manifest hash mismatch");
    }
    Checkpoint ck;
    ck.config = config_from_json(manifest.at("config"));
    ck.fingerprint = manifest.at("fingerprint");
    if (ck.fingerprint != config_fingerprint(ck.config)) throw DataError("config fingerprint mismatch");
    ck.step = manifest.at("step");
    ck.model = Model::init(ck.config.model, ck.config.seed);
    ck.model.sessions = SessionEmbeddingTable(manifest.at("sessions").at("dim"), manifest.at("sessions").at("window"));
    const auto& a = manifest.at("adam");
    ck.adam.beta1 = a.at("beta1");
    ck.adam.beta2 = a.at("beta2");
    ck.adam.eps = a.at("eps");
    ck.adam.step = a.at("step");

    std::size_t loaded = 0;
    for (const auto& f : manifest.at("files")) {
      const std::string file = f.at("file");
      for (auto& [name, t] : read_indexed(root, f)) {
        if (file == "params.bin") {
          if (!ck.model.params.contains(name)) throw DataError("unexpected parameter '" + name + "'");
          Tensor& dst = ck.model.params.at(name);
          if (dst.shape() != t.shape()) {
            throw DataError("parameter '" + name + "' has shape " + shape_str(t.shape()) + ", expected " +
                            shape_str(dst.shape()));
          }
          dst = std::move(t);
          ++loaded;
        } else if (file == "moments.bin") {
          const bool first = name.rfind("m/", 0) == 0;
          const std::string pname = name.substr(2);
          const std::size_t i = ck.model.params.index_of(pname);
          auto& bank = first ? ck.adam.m : ck.adam.v;
          if (bank.size() <= i) bank.resize(i + 1);
          bank[i].assign(t.values().begin(), t.values().end());
        } else if (file == "tables.bin") {
          if (name.rfind("session/", 0) == 0) {
            ck.model.sessions.set(name.substr(8), {t.values().begin(), t.values().end()});
          } else if (name == "joint/mean") {
            ck.model.joint.mean.assign(t.values().begin(), t.values().end());
          } else if (name == "joint/basis") {
            ck.model.joint.basis = std::move(t);
          } else {
            throw DataError("unexpected table '" + name + "'");
          }
        } else {
          throw DataError("unexpected file '" + file + "'");
        }
      }
    }
    if (loaded != ck.model.params.size()) {
      throw DataError("checkpoint holds " + std::to_string(loaded) + " of " +
                      std::to_string(ck.model.params.size()) + " parameters");
    }
    if (ck.adam.m.size() != ck.adam.v.size() || (!ck.adam.m.empty() && ck.adam.m.size() != ck.model.params.size())) {
      throw DataError("incomplete optimizer moments");
    }
    return ck;
  } catch (const json::exception& e) {
    throw DataError(dir + ": malformed manifest: " + e.what());
  } catch (const UsageError& e) {
    throw DataError(dir + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(dir + ": " + e.what());
  }
}

std::optional<std::string> latest_checkpoint(const std::string& run_dir) {
  std::optional<std::string> best;
  if (!fs::is_directory(run_dir)) return best;
  std::string best_name;
  for (const auto& e : fs::directory_iterator(run_dir)) {
    const std::string n = e.path().filename().string();
    if (!e.is_directory() || n.rfind("step-", 0) != 0 || n.size() != 11) continue;
    if (!fs::exists(e.path() / "manifest.json")) continue;
    if (n > best_name) {
      best_name = n;
      best = e.path().string();
    }
  }
  return best;
}

}  // namespace neurotext
