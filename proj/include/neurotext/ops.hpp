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
#include <vector>

#include "neurotext/tensor.hpp"

// Differentiable primitives. Every function records its result on the tape
// together with a hand-written backward. Matrices are row-major; "rows" of an
// N-d tensor are its last axis.

namespace neurotext::ops {

struct Strides3 {
  std::size_t t = 1;
  std::size_t w = 1;
  std::size_t h = 1;
};

Var add(Tape& tape, Var a, Var b);
Var sub(Tape& tape, Var a, Var b);
Var mul(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var a, double s);
/// Scalar sum / mean of all elements.
Var sum(Tape& tape, Var a);
Var mean(Tape& tape, Var a);
/// Sum of squares, as a scalar.
Var sum_squares(Tape& tape, Var a);

Var relu(Tape& tape, Var a);
Var tanh(Tape& tape, Var a);
Var sigmoid(Tape& tape, Var a);

Var reshape(Tape& tape, Var a, Shape shape);

/// [n x k] * [k x m].
Var matmul(Tape& tape, Var a, Var b);
/// Treats x as rows of its last axis: (size/in) x in  ->  (size/in) x out.
/// The result keeps x's leading axes.
Var linear(Tape& tape, Var x, Var weight, Var bias);
/// Adds a bias vector along the last axis.
Var add_bias(Tape& tape, Var x, Var bias);

/// 3-D convolution with same-size zero padding.
/// input T x W x H x Cin, kernel kt x kw x kh x Cin x Cout.
/// Output (ceil(T/st), ceil(W/sw), ceil(H/sh), Cout); output voxel o reads
/// input index o*stride + tap - (k-1)/2 along each axis.
Var conv3d(Tape& tape, Var input, Var kernel, Strides3 strides);

/// Dilated 1-D convolution along time with same-length zero padding.
/// input T x Cin, kernel k x Cin x Cout:
///   out[t] = sum_j kernel[j] . input[t + (j - (k-1)/2) * dilation].
Var conv1d_dilated(Tape& tape, Var input, Var kernel, std::size_t dilation);

/// Concatenates along the last axis. All leading axes must agree.
Var concat_last(Tape& tape, const std::vector<Var>& parts);

/// T x W x H x C -> T x C by averaging over the grid.
Var spatial_mean(Tape& tape, Var x);

/// Inverted dropout. Identity when !training or p == 0. The mask is a pure
/// function of (seed, element index).
Var dropout(Tape& tape, Var x, double p, bool training, std::uint64_t seed);

/// Row-wise log-softmax over the last axis.
Var log_softmax(Tape& tape, Var x);

/// Mean over all elements of (pred - target)^2.
Var mse(Tape& tape, Var pred, Var target);
/// Mean over rows of the squared L2 row distance.
Var row_sq_error(Tape& tape, Var pred, Var target);

/// Single-direction LSTM over a T x Din sequence, gate order (i, f, g, o):
///   w_in Din x 4H, w_rec H x 4H, bias 4H. Returns T x H hidden states,
/// indexed by input time even when reverse is set.
Var lstm(Tape& tape, Var x, Var w_in, Var w_rec, Var bias, bool reverse);

}  // namespace neurotext::ops
