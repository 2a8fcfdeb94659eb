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

#include "neurotext/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "neurotext/errors.hpp"
#include "neurotext/rng.hpp"

namespace neurotext::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using CMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using CVecMap = Eigen::Map<const Eigen::VectorXd>;

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  }
}

void accumulate(std::span<double> dst, std::span<const double> src, double s = 1.0) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
}

template <class Fwd, class Deriv>
Var unary(Tape& tape, Var a, Fwd fwd, Deriv deriv) {
  const Tensor& x = tape.value(a);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fwd(x[i]);
  return tape.record(std::move(out), {a}, [a, deriv](Tape& tp, Var self) {
    const auto g = tp.grad(self);
    const Tensor& y = tp.value(self);
    const Tensor& x = tp.value(a);
    auto ga = tp.grad_mut(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

Var add(Tape& tape, Var a, Var b) {
  const Tensor& x = tape.value(a);
  const Tensor& y = tape.value(b);
  require_same_shape(x, y, "add");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& tp, Var self) {
    const auto g = tp.grad(self);
    if (tp.needs_grad(a)) accumulate(tp.grad_mut(a), g);
    if (tp.needs_grad(b)) accumulate(tp.grad_mut(b), g);
  });
}

Var sub(Tape& tape, Var a, Var b) {
  const Tensor& x = tape.value(a);
  const Tensor& y = tape.value(b);
  require_same_shape(x, y, "sub");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& tp, Var self) {
    const auto g = tp.grad(self);
    if (tp.needs_grad(a)) accumulate(tp.grad_mut(a), g);
    if (tp.needs_grad(b)) accumulate(tp.grad_mut(b), g, -1.0);
  });
}

Var mul(Tape& tape, Var a, Var b) {
  const Tensor& x = tape.value(a);
  const Tensor& y = tape.value(b);
  require_same_shape(x, y, "mul");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& tp, Var self) {
    const auto g = tp.grad(self);
    const Tensor& x = tp.value(a);
    const Tensor& y = tp.value(b);
    if (tp.needs_grad(a)) {
      auto ga = tp.grad_mut(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * y[i];
    }
    if (tp.needs_grad(b)) {
      auto gb = tp.grad_mut(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * x[i];
    }
  });
}

Var scale(Tape& tape, Var a, double s) {
  const Tensor& x = tape.value(a);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * x[i];
  return tape.record(std::move(out), {a}, [a, s](Tape& tp, Var self) {
    accumulate(tp.grad_mut(a), tp.grad(self), s);
  });
}

Var sum(Tape& tape, Var a) {
  const Tensor& x = tape.value(a);
  double total = 0.0;
  for (double v : x.values()) total += v;
  return tape.record(Tensor::scalar(total), {a}, [a](Tape& tp, Var self) {
    const double g = tp.grad(self)[0];
    for (double& v : tp.grad_mut(a)) v += g;
  });
}

Var mean(Tape& tape, Var a) {
  const std::size_t n = tape.value(a).size();
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(tape, sum(tape, a), 1.0 / static_cast<double>(n));
}

Var sum_squares(Tape& tape, Var a) {
  const Tensor& x = tape.value(a);
  double total = 0.0;
  for (double v : x.values()) total += v * v;
  return tape.record(Tensor::scalar(total), {a}, [a](Tape& tp, Var self) {
    const double g = tp.grad(self)[0];
    const Tensor& x = tp.value(a);
    auto ga = tp.grad_mut(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * g * x[i];
  });
}

Var relu(Tape& tape, Var a) {
  return unary(
      tape, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Tape& tape, Var a) {
  return unary(
      tape, a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Tape& tape, Var a) {
  return unary(
      tape, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var reshape(Tape& tape, Var a, Shape shape) {
  Tensor out = tape.value(a).reshaped(std::move(shape));
  return tape.record(std::move(out), {a}, [a](Tape& tp, Var self) {
    accumulate(tp.grad_mut(a), tp.grad(self));
  });
}

Var matmul(Tape& tape, Var a, Var b) {
  const Tensor& x = tape.value(a);
  const Tensor& y = tape.value(b);
  if (x.rank() != 2 || y.rank() != 2 || x.dim(1) != y.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(x.shape()) + " and " +
                         shape_str(y.shape()));
  }
  const std::size_t n = x.dim(0), k = x.dim(1), m = y.dim(1);
  Tensor out({n, m});
  MatMap(out.data(), n, m).noalias() = CMatMap(x.data(), n, k) * CMatMap(y.data(), k, m);
  return tape.record(std::move(out), {a, b}, [a, b, n, k, m](Tape& tp, Var self) {
    CMatMap g(tp.grad(self).data(), n, m);
    if (tp.needs_grad(a)) {
      MatMap(tp.grad_mut(a).data(), n, k).noalias() +=
          g * CMatMap(tp.value(b).data(), k, m).transpose();
    }
    if (tp.needs_grad(b)) {
      MatMap(tp.grad_mut(b).data(), k, m).noalias() +=
          CMatMap(tp.value(a).data(), n, k).transpose() * g;
    }
  });
}

Var linear(Tape& tape, Var x, Var weight, Var bias) {
  const Tensor& xv = tape.value(x);
  const Tensor& w = tape.value(weight);
  const Tensor& bv = tape.value(bias);
  if (w.rank() != 2 || xv.rank() == 0 || xv.shape().back() != w.dim(0) ||
      bv.size() != w.dim(1)) {
    throw DimensionError("linear: input " + shape_str(xv.shape()) + ", weight " +
                         shape_str(w.shape()) + ", bias " + shape_str(bv.shape()));
  }
  const std::size_t in = w.dim(0), out_dim = w.dim(1), rows = xv.size() / in;
  Shape out_shape = xv.shape();
  out_shape.back() = out_dim;
  Tensor out(out_shape);
  MatMap o(out.data(), rows, out_dim);
  o.noalias() = CMatMap(xv.data(), rows, in) * CMatMap(w.data(), in, out_dim);
  o.rowwise() += CVecMap(bv.data(), out_dim).transpose();
  return tape.record(std::move(out), {x, weight, bias},
                     [x, weight, bias, in, out_dim, rows](Tape& tp, Var self) {
                       CMatMap g(tp.grad(self).data(), rows, out_dim);
                       if (tp.needs_grad(x)) {
                         MatMap(tp.grad_mut(x).data(), rows, in).noalias() +=
                             g * CMatMap(tp.value(weight).data(), in, out_dim).transpose();
                       }
                       if (tp.needs_grad(weight)) {
                         MatMap(tp.grad_mut(weight).data(), in, out_dim).noalias() +=
                             CMatMap(tp.value(x).data(), rows, in).transpose() * g;
                       }
                       if (tp.needs_grad(bias)) {
                         VecMap(tp.grad_mut(bias).data(), out_dim) += g.colwise().sum().transpose();
                       }
                     });
}

Var add_bias(Tape& tape, Var x, Var bias) {
  const Tensor& xv = tape.value(x);
  const Tensor& bv = tape.value(bias);
  if (xv.rank() == 0 || xv.shape().back() != bv.size()) {
    throw DimensionError("add_bias: input " + shape_str(xv.shape()) + ", bias " +
                         shape_str(bv.shape()));
  }
  const std::size_t c = bv.size(), rows = xv.size() / std::max<std::size_t>(c, 1);
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = xv[r * c + j] + bv[j];
  }
  return tape.record(std::move(out), {x, bias}, [x, bias, c, rows](Tape& tp, Var self) {
    const auto g = tp.grad(self);
    if (tp.needs_grad(x)) accumulate(tp.grad_mut(x), g);
    if (tp.needs_grad(bias)) {
      auto gb = tp.grad_mut(bias);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) gb[j] += g[r * c + j];
      }
    }
  });
}

Var conv3d(Tape& tape, Var input, Var kernel, Strides3 strides) {
  const Tensor& x = tape.value(input);
  const Tensor& k = tape.value(kernel);
  if (strides.t < 1 || strides.w < 1 || strides.h < 1) {
    throw ParameterError("conv3d: strides must be >= 1");
  }
  if (x.rank() != 4 || k.rank() != 5 || k.dim(3) != x.dim(3)) {
    throw DimensionError("conv3d: input " + shape_str(x.shape()) + " incompatible with kernel " +
                         shape_str(k.shape()));
  }
  const std::size_t T = x.dim(0), W = x.dim(1), H = x.dim(2), C = x.dim(3);
  const std::size_t kt = k.dim(0), kw = k.dim(1), kh = k.dim(2), co = k.dim(4);
  if (T == 0 || W == 0 || H == 0 || kt == 0 || kw == 0 || kh == 0) {
    throw DimensionError("conv3d: empty extent in input " + shape_str(x.shape()) +
                         " or kernel " + shape_str(k.shape()));
  }
  const std::size_t To = ceil_div(T, strides.t), Wo = ceil_div(W, strides.w),
                    Ho = ceil_div(H, strides.h);
  const long pt = static_cast<long>((kt - 1) / 2), pw = static_cast<long>((kw - 1) / 2),
             ph = static_cast<long>((kh - 1) / 2);
  const std::size_t K = kt * kw * kh * C, P = To * Wo * Ho;

  // Patch row p holds, for output voxel p, the kt*kw*kh*C input values that
  // the kernel's K rows multiply. Out-of-range taps stay zero.
  auto cols = std::make_shared<std::vector<double>>(P * K, 0.0);
  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t ot = 0; ot < To; ++ot) {
      for (std::size_t ow = 0; ow < Wo; ++ow) {
        for (std::size_t oh = 0; oh < Ho; ++oh) {
          const std::size_t row = (ot * Wo + ow) * Ho + oh;
          for (std::size_t a = 0; a < kt; ++a) {
            const long it = static_cast<long>(ot * strides.t + a) - pt;
            if (it < 0 || it >= static_cast<long>(T)) continue;
            for (std::size_t b = 0; b < kw; ++b) {
              const long iw = static_cast<long>(ow * strides.w + b) - pw;
              if (iw < 0 || iw >= static_cast<long>(W)) continue;
              for (std::size_t c = 0; c < kh; ++c) {
                const long ih = static_cast<long>(oh * strides.h + c) - ph;
                if (ih < 0 || ih >= static_cast<long>(H)) continue;
                const std::size_t src = ((static_cast<std::size_t>(it) * W + iw) * H + ih) * C;
                const std::size_t dst = row * K + ((a * kw + b) * kh + c) * C;
                fn(src, dst);
              }
            }
          }
        }
      }
    }
  };
  {
    const double* xs = x.data();
    double* cs = cols->data();
    for_each_tap([&](std::size_t src, std::size_t dst) {
      std::copy_n(xs + src, C, cs + dst);
    });
  }
  Tensor out({To, Wo, Ho, co});
  MatMap(out.data(), P, co).noalias() = CMatMap(cols->data(), P, K) * CMatMap(k.data(), K, co);

  return tape.record(std::move(out), {input, kernel},
                     [=](Tape& tp, Var self) {
                       CMatMap g(tp.grad(self).data(), P, co);
                       if (tp.needs_grad(kernel)) {
                         MatMap(tp.grad_mut(kernel).data(), K, co).noalias() +=
                             CMatMap(cols->data(), P, K).transpose() * g;
                       }
                       if (tp.needs_grad(input)) {
                         RowMat dcols = g * CMatMap(tp.value(kernel).data(), K, co).transpose();
                         double* gx = tp.grad_mut(input).data();
                         const double* dc = dcols.data();
                         for_each_tap([&](std::size_t src, std::size_t dst) {
                           for (std::size_t i = 0; i < C; ++i) gx[src + i] += dc[dst + i];
                         });
                       }
                     });
}

Var conv1d_dilated(Tape& tape, Var input, Var kernel, std::size_t dilation) {
  if (dilation < 1) throw ParameterError("conv1d_dilated: dilation must be >= 1");
  const Tensor& x = tape.value(input);
  const Tensor& k = tape.value(kernel);
  if (x.rank() != 2 || k.rank() != 3 || k.dim(1) != x.dim(1) || k.dim(0) == 0) {
    throw DimensionError("conv1d_dilated: input " + shape_str(x.shape()) +
                         " incompatible with kernel " + shape_str(k.shape()));
  }
  const std::size_t T = x.dim(0), C = x.dim(1), kn = k.dim(0), co = k.dim(2);
  const long center = static_cast<long>((kn - 1) / 2);
  const std::size_t K = kn * C;
  auto cols = std::make_shared<std::vector<double>>(T * K, 0.0);
  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < kn; ++j) {
        const long src_t = static_cast<long>(t) +
                           (static_cast<long>(j) - center) * static_cast<long>(dilation);
        if (src_t < 0 || src_t >= static_cast<long>(T)) continue;
        fn(static_cast<std::size_t>(src_t) * C, t * K + j * C);
      }
    }
  };
  {
    const double* xs = x.data();
    double* cs = cols->data();
    for_each_tap([&](std::size_t src, std::size_t dst) { std::copy_n(xs + src, C, cs + dst); });
  }
  Tensor out({T, co});
  MatMap(out.data(), T, co).noalias() = CMatMap(cols->data(), T, K) * CMatMap(k.data(), K, co);
  return tape.record(std::move(out), {input, kernel}, [=](Tape& tp, Var self) {
    CMatMap g(tp.grad(self).data(), T, co);
    if (tp.needs_grad(kernel)) {
      MatMap(tp.grad_mut(kernel).data(), K, co).noalias() +=
          CMatMap(cols->data(), T, K).transpose() * g;
    }
    if (tp.needs_grad(input)) {
      RowMat dcols = g * CMatMap(tp.value(kernel).data(), K, co).transpose();
      double* gx = tp.grad_mut(input).data();
      const double* dc = dcols.data();
      for_each_tap([&](std::size_t src, std::size_t dst) {
        for (std::size_t i = 0; i < C; ++i) gx[src + i] += dc[dst + i];
      });
    }
  });
}

Var concat_last(Tape& tape, const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_last: no inputs");
  const Shape& first = tape.shape(parts[0]);
  if (first.empty()) throw DimensionError("concat_last: scalar input");
  Shape lead(first.begin(), first.end() - 1);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Shape& s = tape.shape(parts[i]);
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
      throw DimensionError("concat_last: part " + std::to_string(i) + " has shape " +
                           shape_str(s) + ", part 0 has " + shape_str(first));
    }
    widths.push_back(s.back());
    total += s.back();
  }
  const std::size_t rows = numel(lead);
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor& p = tape.value(parts[i]);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(p.data() + r * widths[i], widths[i], out.data() + r * total + offset);
    }
    offset += widths[i];
  }
  return tape.record(std::move(out), parts, [parts, widths, rows, total](Tape& tp, Var self) {
    const auto g = tp.grad(self);
    std::size_t off = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (tp.needs_grad(parts[i])) {
        auto gp = tp.grad_mut(parts[i]);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < widths[i]; ++j) gp[r * widths[i] + j] += g[r * total + off + j];
        }
      }
      off += widths[i];
    }
  });
}

Var spatial_mean(Tape& tape, Var x) {
  const Tensor& xv = tape.value(x);
  if (xv.rank() != 4) throw DimensionError("spatial_mean: expects T x W x H x C, got " + shape_str(xv.shape()));
  const std::size_t T = xv.dim(0), S = xv.dim(1) * xv.dim(2), C = xv.dim(3);
  const double inv = 1.0 / static_cast<double>(S);
  Tensor out({T, C});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t c = 0; c < C; ++c) out[t * C + c] += xv[(t * S + s) * C + c] * inv;
    }
  }
  return tape.record(std::move(out), {x}, [x, T, S, C, inv](Tape& tp, Var self) {
    const auto g = tp.grad(self);
    auto gx = tp.grad_mut(x);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t c = 0; c < C; ++c) gx[(t * S + s) * C + c] += g[t * C + c] * inv;
      }
    }
  });
}

Var dropout(Tape& tape, Var x, double p, bool training, std::uint64_t seed) {
  if (!(p >= 0.0) || p >= 1.0) {
    throw ParameterError("dropout: probability must satisfy 0 <= p < 1, got " + std::to_string(p));
  }
  if (!training || p == 0.0) return x;
  const Tensor& xv = tape.value(x);
  const double keep = 1.0 - p;
  auto mask = std::make_shared<std::vector<double>>(xv.size());
  Rng rng(seed);
  for (double& m : *mask) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * (*mask)[i];
  return tape.record(std::move(out), {x}, [x, mask](Tape& tp, Var self) {
    const auto g = tp.grad(self);
    auto gx = tp.grad_mut(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * (*mask)[i];
  });
}

Var log_softmax(Tape& tape, Var x) {
  const Tensor& xv = tape.value(x);
  if (xv.rank() == 0 || xv.shape().back() == 0) throw DimensionError("log_softmax: empty rows");
  const std::size_t c = xv.shape().back(), rows = xv.size() / c;
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * c;
    double* o = out.data() + r * c;
    const double mx = *std::max_element(in, in + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(in[j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < c; ++j) o[j] = in[j] - lse;
  }
  return tape.record(std::move(out), {x}, [x, c, rows](Tape& tp, Var self) {
    const auto g = tp.grad(self);
    const Tensor& y = tp.value(self);
    auto gx = tp.grad_mut(x);
    for (std::size_t r = 0; r < rows; ++r) {
      double gs = 0.0;
      for (std::size_t j = 0; j < c; ++j) gs += g[r * c + j];
      for (std::size_t j = 0; j < c; ++j) {
        gx[r * c + j] += g[r * c + j] - std::exp(y[r * c + j]) * gs;
      }
    }
  });
}

Var mse(Tape& tape, Var pred, Var target) {
  const Tensor& a = tape.value(pred);
  const Tensor& b = tape.value(target);
  require_same_shape(a, b, "mse");
  if (a.size() == 0) throw DimensionError("mse: empty tensors");
  const double inv = 1.0 / static_cast<double>(a.size());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  return tape.record(Tensor::scalar(total * inv), {pred, target},
                     [pred, target, inv](Tape& tp, Var self) {
                       const double g = tp.grad(self)[0];
                       const Tensor& a = tp.value(pred);
                       const Tensor& b = tp.value(target);
                       if (tp.needs_grad(pred)) {
                         auto ga = tp.grad_mut(pred);
                         for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * g * inv * (a[i] - b[i]);
                       }
                       if (tp.needs_grad(target)) {
                         auto gb = tp.grad_mut(target);
                         for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= 2.0 * g * inv * (a[i] - b[i]);
                       }
                     });
}

Var row_sq_error(Tape& tape, Var pred, Var target) {
  const Tensor& a = tape.value(pred);
  require_same_shape(a, tape.value(target), "row_sq_error");
  if (a.rank() == 0 || a.size() == 0) throw DimensionError("row_sq_error: empty tensors");
  const std::size_t rows = a.size() / a.shape().back();
  // Mean over rows of the row sum == mse scaled by the row width.
  return scale(tape, mse(tape, pred, target),
               static_cast<double>(a.size()) / static_cast<double>(rows));
}

Var lstm(Tape& tape, Var x, Var w_in, Var w_rec, Var bias, bool reverse) {
  const Tensor& xv = tape.value(x);
  const Tensor& wi = tape.value(w_in);
  const Tensor& wr = tape.value(w_rec);
  const Tensor& bv = tape.value(bias);
  if (xv.rank() != 2 || wi.rank() != 2 || wr.rank() != 2 || wi.dim(0) != xv.dim(1) ||
      wr.dim(1) != wi.dim(1) || wr.dim(1) != 4 * wr.dim(0) || bv.size() != wi.dim(1)) {
    throw DimensionError("lstm: input " + shape_str(xv.shape()) + ", w_in " + shape_str(wi.shape()) +
                         ", w_rec " + shape_str(wr.shape()) + ", bias " + shape_str(bv.shape()));
  }
  const std::size_t T = xv.dim(0), D = xv.dim(1), Hd = wr.dim(0), G = 4 * Hd;

  // Per-step caches: activated gates (i, f, g, o), cell state, tanh(cell).
  struct Cache {
    RowMat gates;  // T x 4H, post-activation
    RowMat cell;   // T x H
    RowMat tcell;  // T x H
  };
  auto cache = std::make_shared<Cache>();
  cache->gates = CMatMap(xv.data(), T, D) * CMatMap(wi.data(), D, G);
  cache->gates.rowwise() += CVecMap(bv.data(), G).transpose();
  cache->cell.setZero(T, Hd);
  cache->tcell.setZero(T, Hd);
  Tensor out({T, Hd});
  MatMap hs(out.data(), T, Hd);
  CMatMap U(wr.data(), Hd, G);
  Eigen::RowVectorXd h_prev = Eigen::RowVectorXd::Zero(Hd);
  Eigen::RowVectorXd c_prev = Eigen::RowVectorXd::Zero(Hd);
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = reverse ? T - 1 - s : s;
    auto g = cache->gates.row(t);
    if (s > 0) g.noalias() += h_prev * U;
    for (std::size_t j = 0; j < Hd; ++j) {
      g[j] = 1.0 / (1.0 + std::exp(-g[j]));
      g[Hd + j] = 1.0 / (1.0 + std::exp(-g[Hd + j]));
      g[2 * Hd + j] = std::tanh(g[2 * Hd + j]);
      g[3 * Hd + j] = 1.0 / (1.0 + std::exp(-g[3 * Hd + j]));
      const double c = g[Hd + j] * c_prev[j] + g[j] * g[2 * Hd + j];
      cache->cell(t, j) = c;
      const double tc = std::tanh(c);
      cache->tcell(t, j) = tc;
      hs(t, j) = g[3 * Hd + j] * tc;
    }
    h_prev = hs.row(t);
    c_prev = cache->cell.row(t);
  }

  return tape.record(std::move(out), {x, w_in, w_rec, bias},
                     [=](Tape& tp, Var self) {
                       CMatMap dh_out(tp.grad(self).data(), T, Hd);
                       CMatMap hsv(tp.value(self).data(), T, Hd);
                       CMatMap Uv(tp.value(w_rec).data(), Hd, G);
                       RowMat dpre(T, G);
                       Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(Hd);
                       Eigen::RowVectorXd dc_next = Eigen::RowVectorXd::Zero(Hd);
                       for (std::size_t s = T; s-- > 0;) {
                         const std::size_t t = reverse ? T - 1 - s : s;
                         const auto gt = cache->gates.row(t);
                         for (std::size_t j = 0; j < Hd; ++j) {
                           const double i = gt[j], f = gt[Hd + j], gg = gt[2 * Hd + j],
                                        o = gt[3 * Hd + j];
                           const double tc = cache->tcell(t, j);
                           const double c_prev =
                               s > 0 ? cache->cell(reverse ? t + 1 : t - 1, j) : 0.0;
                           const double dh = dh_out(t, j) + dh_next[j];
                           const double dc = dh * o * (1.0 - tc * tc) + dc_next[j];
                           dpre(t, j) = dc * gg * i * (1.0 - i);
                           dpre(t, Hd + j) = dc * c_prev * f * (1.0 - f);
                           dpre(t, 2 * Hd + j) = dc * i * (1.0 - gg * gg);
                           dpre(t, 3 * Hd + j) = dh * tc * o * (1.0 - o);
                           dc_next[j] = dc * f;
                         }
                         dh_next.noalias() = dpre.row(t) * Uv.transpose();
                       }
                       if (tp.needs_grad(w_rec)) {
                         // h_prev for step s is the hidden state of step s-1.
                         RowMat h_prev_mat = RowMat::Zero(T, Hd);
                         for (std::size_t s = 1; s < T; ++s) {
                           const std::size_t t = reverse ? T - 1 - s : s;
                           h_prev_mat.row(t) = hsv.row(reverse ? t + 1 : t - 1);
                         }
                         MatMap(tp.grad_mut(w_rec).data(), Hd, G).noalias() +=
                             h_prev_mat.transpose() * dpre;
                       }
                       if (tp.needs_grad(w_in)) {
                         MatMap(tp.grad_mut(w_in).data(), D, G).noalias() +=
                             CMatMap(tp.value(x).data(), T, D).transpose() * dpre;
                       }
                       if (tp.needs_grad(bias)) {
                         VecMap(tp.grad_mut(bias).data(), G) += dpre.colwise().sum().transpose();
                       }
                       if (tp.needs_grad(x)) {
                         MatMap(tp.grad_mut(x).data(), T, D).noalias() +=
                             dpre * CMatMap(tp.value(w_in).data(), D, G).transpose();
                       }
                     });
}

}  // namespace neurotext::ops
