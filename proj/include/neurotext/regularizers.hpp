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
#include <utility>
#include <vector>

#include "neurotext/params.hpp"
#include "neurotext/tensor.hpp"

namespace neurotext {

class SessionEmbeddingTable {
 public:
  SessionEmbeddingTable() = default;
  SessionEmbeddingTable(std::size_t dim, std::size_t window) : dim_(dim), window_(window) {}

  std::size_t dim() const { return dim_; }
  std::size_t window() const { return window_; }
  bool contains(const std::string& id) const { return table_.count(id) != 0; }
  /// Throws DataError for an unknown session.
  const std::vector<double>& at(const std::string& id) const;
  void set(const std::string& id, std::vector<double> v);
  const std::map<std::string, std::vector<double>>& entries() const { return table_; }

 private:
  std::size_t dim_ = 8;
  std::size_t window_ = 2;
  std::map<std::string, std::vector<double>> table_;
};

struct SkipGramOptions {
  std::size_t dim = 8;
  std::size_t window = 2;
  std::size_t epochs = 400;
  std::size_t negatives = 2;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;
};

/// Ordered (center, context) pairs within +-window over the distinct sessions in first-seen order.
std::vector<std::pair<std::string, std::string>> skipgram_pairs(
    const std::vector<std::string>& sessions, std::size_t window);

/// Skip-gram with negative sampling. Each embedding is the normalized sum of
/// its input and output vectors. A single session yields one zero vector.
SessionEmbeddingTable train_session_embeddings(const std::vector<std::string>& sessions,
                                               const SkipGramOptions& options);

enum class RegTarget { kMfcc, kAkt, kSession };
enum class RegMode { kIndependent, kJoint };

const char* reg_target_name(RegTarget t);
RegTarget parse_reg_target(const std::string& name);

struct RegSpec {
  RegMode mode = RegMode::kIndependent;
  std::vector<RegTarget> targets{RegTarget::kMfcc, RegTarget::kAkt, RegTarget::kSession};
  double alpha_ctc = 1.0;
  double alpha_mfcc = 1.0;
  double alpha_akt = 1.0;
  double alpha_session = 1.0;
  /// Weight of the single joint-mode loss.
  double alpha_joint = 1.0;
  /// Steps until the regularizer weights reach zero.
  std::size_t horizon_steps = 1000;
  std::size_t joint_dim = 32;

  void validate() const;
  bool uses(RegTarget t) const;
  double alpha(RegTarget t) const;
  /// max(0, 1 - step / horizon).
  double decay(std::size_t step) const;
};

/// Fixed projection for the joint mode: centered PCA basis of the
/// concatenated training targets.
struct JointProjection {
  std::vector<double> mean;
  /// in_dim x out_dim, orthonormal columns.
  Tensor basis;

  std::size_t in_dim() const { return mean.size(); }
  std::size_t out_dim() const { return basis.empty() ? 0 : basis.dim(1); }
  Tensor apply(const Tensor& concatenated) const;
  static JointProjection fit(const std::vector<const Tensor*>& frames, std::size_t out_dim);
};

void init_regression_head(ParamStore& store, const std::string& name, std::size_t latent_dim,
                          std::size_t out_dim, std::uint64_t seed);
/// prefix + name + ".weight/.bias" applied to every frame.
Var regression_head(BoundParams& params, Var latent, const std::string& name);

/// Mean over frames of ||pred_t - q||^2.
Var session_loss(Tape& tape, Var pred, const std::vector<double>& q);

struct FeatureTarget {
  RegTarget kind;
  Var pred;
  /// T' x d target at the latent frame rate.
  Tensor target;
  double alpha = 1.0;
};

/// Independent mode: sum_i alpha_i * mse(pred_i, target_i).
Var feature_reg_loss(Tape& tape, const std::vector<FeatureTarget>& targets);
/// Joint mode: mse(pred, projection(concat(targets))).
Var joint_feature_loss(Tape& tape, Var pred, const std::vector<const Tensor*>& targets,
                       const JointProjection& projection);

struct RegTerm {
  Var loss;
  double alpha = 1.0;
};

/// alpha_ctc * ctc + decay(step) * sum alpha_i * L_i.
Var total_loss(Tape& tape, Var ctc, const std::vector<RegTerm>& terms, const RegSpec& spec,
               std::size_t step);

/// Linear interpolation of T x d samples at the centers of ceil(T / stride) frames.
Tensor resample_to_frames(const Tensor& samples, std::size_t stride, std::size_t frames);

/// Between-session over within-session variance of per-utterance latent means.
double session_variance_ratio(const std::vector<Tensor>& latents,
                              const std::vector<std::string>& sessions);

}  // namespace neurotext
