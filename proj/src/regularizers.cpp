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

#include "neurotext/regularizers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "neurotext/errors.hpp"
#include "neurotext/ops.hpp"
#include "neurotext/rng.hpp"

namespace neurotext {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<std::string> distinct_in_order(const std::vector<std::string>& ids) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& s : ids) {
    if (seen.insert(s).second) out.push_back(s);
  }
  return out;
}

}  // namespace

const std::vector<double>& SessionEmbeddingTable::at(const std::string& id) const {
  const auto it = table_.find(id);
  if (it == table_.end()) throw DataError("unknown session '" + id + "'");
  return it->second;
}

void SessionEmbeddingTable::set(const std::string& id, std::vector<double> v) {
  if (v.size() != dim_) throw DimensionError("session embedding has the wrong dimension");
  table_[id] = std::move(v);
}

std::vector<std::pair<std::string, std::string>> skipgram_pairs(
    const std::vector<std::string>& sessions, std::size_t window) {
  const auto ids = distinct_in_order(sessions);
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::size_t lo = i >= window ? i - window : 0;
    const std::size_t hi = std::min(ids.size() - 1, i + window);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != i) out.emplace_back(ids[i], ids[j]);
    }
  }
  return out;
}

SessionEmbeddingTable train_session_embeddings(const std::vector<std::string>& sessions,
                                               const SkipGramOptions& o) {
  if (o.dim == 0 || o.window == 0) throw ParameterError("skip-gram dim and window must be >= 1");
  const auto ids = distinct_in_order(sessions);
  SessionEmbeddingTable table(o.dim, o.window);
  if (ids.empty()) throw DataError("no sessions");
  if (ids.size() == 1) {
    std::cerr << "warning: one session; its embedding is zero\n";
    table.set(ids[0], std::vector<double>(o.dim, 0.0));
    return table;
  }
  const std::size_t V = ids.size(), d = o.dim;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < V; ++i) index[ids[i]] = i;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& [c, x] : skipgram_pairs(ids, o.window)) pairs.emplace_back(index[c], index[x]);

  Rng rng(mix_seed({o.seed, 0x5e55'1011ULL}));
  std::vector<double> in(V * d), out(V * d, 0.0), grad(d);
  for (double& v : in) v = rng.uniform(-0.5, 0.5) / static_cast<double>(d);

  const double total = static_cast<double>(o.epochs * pairs.size());
  double done = 0.0;
  for (std::size_t e = 0; e < o.epochs; ++e) {
    for (const auto& [c, x] : pairs) {
      const double lr = o.learning_rate * std::max(1e-4, 1.0 - done / total);
      done += 1.0;
      std::fill(grad.begin(), grad.end(), 0.0);
      auto update = [&](std::size_t target, double label) {
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += in[c * d + k] * out[target * d + k];
        const double g = lr * (label - sigmoid(dot));
        for (std::size_t k = 0; k < d; ++k) {
          grad[k] += g * out[target * d + k];
          out[target * d + k] += g * in[c * d + k];
        }
      };
      update(x, 1.0);
      for (std::size_t n = 0; n < o.negatives; ++n) {
        if (V <= 2) break;
        std::size_t neg;
        do {
          neg = rng.below(V);
        } while (neg == x || neg == c);
        update(neg, 0.0);
      }
      for (std::size_t k = 0; k < d; ++k) in[c * d + k] += grad[k];
    }
  }
  for (std::size_t i = 0; i < V; ++i) {
    std::vector<double> v(d);
    double n2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      v[k] = in[i * d + k] + out[i * d + k];
      n2 += v[k] * v[k];
    }
    const double n = std::sqrt(n2);
    if (n > 0.0) {
      for (double& x : v) x /= n;
    }
    table.set(ids[i], std::move(v));
  }
  return table;
}

const char* reg_target_name(RegTarget t) {
  switch (t) {
    case RegTarget::kMfcc: return "mfcc";
    case RegTarget::kAkt: return "akt";
    case RegTarget::kSession: return "session";
  }
  return "?";
}

RegTarget parse_reg_target(const std::string& name) {
  if (name == "mfcc") return RegTarget::kMfcc;
  if (name == "akt") return RegTarget::kAkt;
  if (name == "session") return RegTarget::kSession;
  throw ParameterError("unknown regularization target '" + name + "'");
}

void RegSpec::validate() const {
  for (double a : {alpha_ctc, alpha_mfcc, alpha_akt, alpha_session, alpha_joint}) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ParameterError("regularization weights must be >= 0");
  }
  if (horizon_steps == 0) throw ParameterError("decay horizon must be >= 1 step");
  if (mode == RegMode::kJoint && joint_dim == 0) throw ParameterError("joint_dim must be >= 1");
}

bool RegSpec::uses(RegTarget t) const {
  return std::find(targets.begin(), targets.end(), t) != targets.end();
}

double RegSpec::alpha(RegTarget t) const {
  switch (t) {
    case RegTarget::kMfcc: return alpha_mfcc;
    case RegTarget::kAkt: return alpha_akt;
    case RegTarget::kSession: return alpha_session;
  }
  return 0.0;
}

double RegSpec::decay(std::size_t step) const {
  if (step >= horizon_steps) return 0.0;
  return 1.0 - static_cast<double>(step) / static_cast<double>(horizon_steps);
}

Tensor JointProjection::apply(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != in_dim()) {
    throw DimensionError("joint projection expects T x " + std::to_string(in_dim()) + ", got " +
                         shape_str(x.shape()));
  }
  const std::size_t T = x.dim(0), D = in_dim(), K = out_dim();
  Tensor out({T, K});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < D; ++j) acc += (x[t * D + j] - mean[j]) * basis[j * K + k];
      out[t * K + k] = acc;
    }
  }
  return out;
}

JointProjection JointProjection::fit(const std::vector<const Tensor*>& frames, std::size_t out_dim) {
  if (frames.empty()) throw DataError("no frames to fit the joint projection");
  const std::size_t D = frames[0]->dim(1);
  if (out_dim == 0 || out_dim > D) throw ParameterError("joint_dim must be in [1, target dim]");
  std::size_t N = 0;
  for (const Tensor* f : frames) {
    if (f->rank() != 2 || f->dim(1) != D) throw DimensionError("joint projection targets disagree in width");
    N += f->dim(0);
  }
  JointProjection p;
  p.mean.assign(D, 0.0);
  for (const Tensor* f : frames) {
    for (std::size_t i = 0; i < f->size(); ++i) p.mean[i % D] += (*f)[i];
  }
  for (double& m : p.mean) m /= static_cast<double>(N);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<long>(D), static_cast<long>(D));
  for (const Tensor* f : frames) {
    for (std::size_t t = 0; t < f->dim(0); ++t) {
      Eigen::VectorXd v(static_cast<long>(D));
      for (std::size_t j = 0; j < D; ++j) v[static_cast<long>(j)] = (*f)[t * D + j] - p.mean[j];
      cov.noalias() += v * v.transpose();
    }
  }
  cov /= static_cast<double>(std::max<std::size_t>(N, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  p.basis = Tensor({D, out_dim});
  for (std::size_t k = 0; k < out_dim; ++k) {
    // Eigenvalues ascend; take from the top and fix the sign by the largest entry.
    Eigen::VectorXd v = eig.eigenvectors().col(static_cast<long>(D - 1 - k));
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    for (std::size_t j = 0; j < D; ++j) p.basis[j * out_dim + k] = v[static_cast<long>(j)];
  }
  return p;
}

void init_regression_head(ParamStore& store, const std::string& name, std::size_t latent_dim,
                          std::size_t out_dim, std::uint64_t seed) {
  store.add_uniform(name + ".weight", {latent_dim, out_dim}, latent_dim, seed);
  store.add_uniform(name + ".bias", {out_dim}, latent_dim, seed);
}

Var regression_head(BoundParams& params, Var latent, const std::string& name) {
  return ops::linear(params.tape(), latent, params(name + ".weight"), params(name + ".bias"));
}

Var session_loss(Tape& tape, Var pred, const std::vector<double>& q) {
  const Shape& s = tape.shape(pred);
  if (s.size() != 2 || s[1] != q.size()) {
    throw DimensionError("session head output " + shape_str(s) + " vs embedding of " +
                         std::to_string(q.size()));
  }
  Tensor target({s[0], s[1]});
  for (std::size_t t = 0; t < s[0]; ++t) std::copy(q.begin(), q.end(), target.values().begin() + static_cast<long>(t * q.size()));
  return ops::row_sq_error(tape, pred, tape.constant(std::move(target)));
}

Var feature_reg_loss(Tape& tape, const std::vector<FeatureTarget>& targets) {
  Var total = tape.constant(Tensor::scalar(0.0));
  for (const auto& ft : targets) {
    const Shape& ps = tape.shape(ft.pred);
    if (ps.size() != 2 || ft.target.rank() != 2 || ps[0] != ft.target.dim(0)) {
      throw DimensionError(std::string(reg_target_name(ft.kind)) + " target has " +
                           shape_str(ft.target.shape()) + ", latent predictions " + shape_str(ps));
    }
    if (ft.alpha == 0.0) continue;
    Var l = ops::mse(tape, ft.pred, tape.constant(ft.target));
    total = ops::add(tape, total, ops::scale(tape, l, ft.alpha));
  }
  return total;
}

Var joint_feature_loss(Tape& tape, Var pred, const std::vector<const Tensor*>& targets,
                       const JointProjection& projection) {
  if (targets.empty()) throw DataError("joint mode needs at least one target");
  const std::size_t T = targets[0]->dim(0);
  std::size_t width = 0;
  for (const Tensor* t : targets) {
    if (t->rank() != 2 || t->dim(0) != T) throw DimensionError("joint targets disagree in frame count");
    width += t->dim(1);
  }
  Tensor cat({T, width});
  for (std::size_t t = 0; t < T; ++t) {
    std::size_t off = 0;
    for (const Tensor* x : targets) {
      const std::size_t d = x->dim(1);
      for (std::size_t j = 0; j < d; ++j) cat[t * width + off + j] = (*x)[t * d + j];
      off += d;
    }
  }
  Tensor z = projection.apply(cat);
  if (tape.shape(pred) != z.shape()) {
    throw DimensionError("joint head output " + shape_str(tape.shape(pred)) + " vs projected target " +
                         shape_str(z.shape()));
  }
  return ops::mse(tape, pred, tape.constant(std::move(z)));
}

Var total_loss(Tape& tape, Var ctc, const std::vector<RegTerm>& terms, const RegSpec& spec,
               std::size_t step) {
  Var total = ops::scale(tape, ctc, spec.alpha_ctc);
  const double d = spec.decay(step);
  if (d == 0.0) return total;
  for (const auto& term : terms) {
    if (term.alpha == 0.0) continue;
    total = ops::add(tape, total, ops::scale(tape, term.loss, d * term.alpha));
  }
  return total;
}

Tensor resample_to_frames(const Tensor& samples, std::size_t stride, std::size_t frames) {
  if (samples.rank() != 2 || samples.dim(0) == 0) throw DimensionError("resample expects a non-empty T x d tensor");
  if (stride == 0) throw ParameterError("stride must be >= 1");
  const std::size_t T = samples.dim(0), d = samples.dim(1);
  Tensor out({frames, d});
  for (std::size_t j = 0; j < frames; ++j) {
    const double center = static_cast<double>(j * stride) + 0.5 * static_cast<double>(stride - 1);
    const double pos = std::clamp(center, 0.0, static_cast<double>(T - 1));
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, T - 1);
    const double w = pos - static_cast<double>(lo);
    for (std::size_t k = 0; k < d; ++k) {
      out[j * d + k] = (1.0 - w) * samples[lo * d + k] + w * samples[hi * d + k];
    }
  }
  return out;
}

double session_variance_ratio(const std::vector<Tensor>& latents,
                              const std::vector<std::string>& sessions) {
  if (latents.size() != sessions.size() || latents.empty()) {
    throw DimensionError("one session id per latent sequence required");
  }
  const std::size_t D = latents[0].dim(1);
  std::vector<std::vector<double>> means;
  for (const auto& z : latents) {
    if (z.rank() != 2 || z.dim(1) != D || z.dim(0) == 0) throw DimensionError("latents disagree in width");
    std::vector<double> m(D, 0.0);
    for (std::size_t i = 0; i < z.size(); ++i) m[i % D] += z[i];
    for (double& v : m) v /= static_cast<double>(z.dim(0));
    means.push_back(std::move(m));
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < sessions.size(); ++i) groups[sessions[i]].push_back(i);
  const std::size_t N = means.size(), S = groups.size();
  if (S < 2 || N <= S) throw DataError("variance ratio needs >= 2 sessions and more utterances than sessions");
  std::vector<double> grand(D, 0.0);
  for (const auto& m : means)
    for (std::size_t k = 0; k < D; ++k) grand[k] += m[k] / static_cast<double>(N);
  double between = 0.0, within = 0.0;
  for (const auto& [id, idx] : groups) {
    std::vector<double> mu(D, 0.0);
    for (std::size_t i : idx)
      for (std::size_t k = 0; k < D; ++k) mu[k] += means[i][k] / static_cast<double>(idx.size());
    for (std::size_t k = 0; k < D; ++k) {
      between += static_cast<double>(idx.size()) * (mu[k] - grand[k]) * (mu[k] - grand[k]);
    }
    for (std::size_t i : idx)
      for (std::size_t k = 0; k < D; ++k) within += (means[i][k] - mu[k]) * (means[i][k] - mu[k]);
  }
  between /= static_cast<double>(S - 1);
  within /= static_cast<double>(N - S);
  if (within == 0.0) return between == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return between / within;
}

}  // namespace neurotext
