// Copyright 2026 The mtltc Authors.
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

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mtltc/error.hpp"

namespace mtltc::nn {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Activations for a batch of sequences, stored as a (batch * length, channels)
/// row-major matrix. Sample b owns rows [b * length, (b + 1) * length). Dense
/// stages use length == 1, so `data` is simply (batch, features).
template <typename Scalar>
struct Batch {
  Matrix<Scalar> data;
  Index batch = 0;
  Index length = 0;

  Index channels() const { return data.cols(); }
};

/// A trainable tensor with its gradient, both shaped identically.
template <typename Scalar>
struct Param {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  Param() = default;
  Param(std::string n, Index rows, Index cols)
      : name(std::move(n)), value(Matrix<Scalar>::Zero(rows, cols)),
        grad(Matrix<Scalar>::Zero(rows, cols)) {}
};

template <typename Scalar, typename Rng>
void fill_uniform(Matrix<Scalar>& m, double limit, Rng& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(dist(rng));
}

/// Valid (unpadded) stride-1 1D convolution.
///
/// Weights are stored as a (kernel * in_channels, filters) matrix whose row
/// j * in_channels + c holds tap j of input channel c, so that a window of the
/// row-major input is one contiguous im2col row.
template <typename Scalar>
class Conv1D {
 public:
  Conv1D(Index in_channels, Index filters, Index kernel, std::string name = "conv")
      : in_channels_(in_channels), filters_(filters), kernel_(kernel),
        weight_(name + ".weight", kernel * in_channels, filters),
        bias_(name + ".bias", 1, filters) {}

  Index in_channels() const { return in_channels_; }
  Index filters() const { return filters_; }
  Index kernel() const { return kernel_; }

  Index output_length(Index length) const { return length - kernel_ + 1; }

  template <typename Rng>
  void init_he_uniform(Rng& rng) {
    fill_uniform(weight_.value, std::sqrt(6.0 / static_cast<double>(kernel_ * in_channels_)), rng);
    bias_.value.setZero();
  }

  Batch<Scalar> forward(const Batch<Scalar>& in) {
    if (in.channels() != in_channels_) {
      throw ShapeError(weight_.name + ": expected " + std::to_string(in_channels_) +
                       " input channels, got " + std::to_string(in.channels()));
    }
    if (in.length < kernel_) {
      throw ShapeError(weight_.name + ": input length " + std::to_string(in.length) +
                       " shorter than kernel " + std::to_string(kernel_));
    }
    in_length_ = in.length;
    const Index out_len = output_length(in.length);
    const Index window = kernel_ * in_channels_;
    cols_.resize(in.batch * out_len, window);
    for (Index b = 0; b < in.batch; ++b) {
      const Scalar* src = in.data.data() + b * in.length * in_channels_;
      for (Index i = 0; i < out_len; ++i) {
        std::copy_n(src + i * in_channels_, window, cols_.row(b * out_len + i).data());
      }
    }
    Batch<Scalar> out;
    out.batch = in.batch;
    out.length = out_len;
    out.data.noalias() = cols_ * weight_.value;
    out.data.rowwise() += bias_.value.row(0);
    return out;
  }

  /// Sets parameter gradients and returns the gradient with respect to the input.
  Batch<Scalar> backward(const Batch<Scalar>& grad_out) {
    weight_.grad.noalias() = cols_.transpose() * grad_out.data;
    bias_.grad = grad_out.data.colwise().sum();
    const Matrix<Scalar> grad_cols = grad_out.data * weight_.value.transpose();

    Batch<Scalar> grad_in;
    grad_in.batch = grad_out.batch;
    grad_in.length = in_length_;
    grad_in.data = Matrix<Scalar>::Zero(grad_out.batch * in_length_, in_channels_);
    const Index window = kernel_ * in_channels_;
    for (Index b = 0; b < grad_out.batch; ++b) {
      Scalar* dst = grad_in.data.data() + b * in_length_ * in_channels_;
      for (Index i = 0; i < grad_out.length; ++i) {
        const Scalar* g = grad_cols.row(b * grad_out.length + i).data();
        Scalar* d = dst + i * in_channels_;
        for (Index w = 0; w < window; ++w) d[w] += g[w];
      }
    }
    return grad_in;
  }

  Param<Scalar>& weight() { return weight_; }
  Param<Scalar>& bias() { return bias_; }
  const Param<Scalar>& weight() const { return weight_; }
  const Param<Scalar>& bias() const { return bias_; }

 private:
  Index in_channels_;
  Index filters_;
  Index kernel_;
  Param<Scalar> weight_;
  Param<Scalar> bias_;
  Matrix<Scalar> cols_;
  Index in_length_ = 0;
};

/// Max pooling with window 2 and stride 2. A trailing odd element is dropped.
/// Ties route the gradient to the first index of the window.
template <typename Scalar>
class MaxPool1D {
 public:
  static constexpr Index kWindow = 2;

  Index output_length(Index length) const { return length / kWindow; }

  Batch<Scalar> forward(const Batch<Scalar>& in) {
    if (in.length < kWindow) {
      throw ShapeError("maxpool: input length " + std::to_string(in.length) + " < 2");
    }
    in_length_ = in.length;
    const Index out_len = output_length(in.length);
    const Index channels = in.channels();
    Batch<Scalar> out;
    out.batch = in.batch;
    out.length = out_len;
    out.data.resize(in.batch * out_len, channels);
    second_.resize(in.batch * out_len, channels);
    for (Index b = 0; b < in.batch; ++b) {
      for (Index i = 0; i < out_len; ++i) {
        const Index r0 = b * in.length + kWindow * i;
        const Index ro = b * out_len + i;
        for (Index c = 0; c < channels; ++c) {
          const Scalar a = in.data(r0, c);
          const Scalar z = in.data(r0 + 1, c);
          const bool take_second = z > a;
          second_(ro, c) = take_second ? 1 : 0;
          out.data(ro, c) = take_second ? z : a;
        }
      }
    }
    return out;
  }

  Batch<Scalar> backward(const Batch<Scalar>& grad_out) {
    const Index channels = grad_out.channels();
    Batch<Scalar> grad_in;
    grad_in.batch = grad_out.batch;
    grad_in.length = in_length_;
    grad_in.data = Matrix<Scalar>::Zero(grad_out.batch * in_length_, channels);
    for (Index b = 0; b < grad_out.batch; ++b) {
      for (Index i = 0; i < grad_out.length; ++i) {
        const Index r0 = b * in_length_ + kWindow * i;
        const Index ro = b * grad_out.length + i;
        for (Index c = 0; c < channels; ++c) {
          grad_in.data(r0 + second_(ro, c), c) = grad_out.data(ro, c);
        }
      }
    }
    return grad_in;
  }

 private:
  Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> second_;
  Index in_length_ = 0;
};

template <typename Scalar>
class ReLU {
 public:
  Batch<Scalar> forward(const Batch<Scalar>& in) {
    Batch<Scalar> out = in;
    out.data = in.data.cwiseMax(Scalar(0));
    active_ = (in.data.array() > Scalar(0));
    return out;
  }

  Batch<Scalar> backward(const Batch<Scalar>& grad_out) {
    Batch<Scalar> grad_in = grad_out;
    grad_in.data = active_.select(grad_out.data.array(), Scalar(0)).matrix();
    return grad_in;
  }

 private:
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> active_;
};

/// Reinterprets (batch * length, channels) as (batch, length * channels).
template <typename Scalar>
class Flatten {
 public:
  Batch<Scalar> forward(const Batch<Scalar>& in) {
    length_ = in.length;
    channels_ = in.channels();
    Batch<Scalar> out;
    out.batch = in.batch;
    out.length = 1;
    out.data = Eigen::Map<const Matrix<Scalar>>(in.data.data(), in.batch, in.length * channels_);
    return out;
  }

  Batch<Scalar> backward(const Batch<Scalar>& grad_out) {
    Batch<Scalar> grad_in;
    grad_in.batch = grad_out.batch;
    grad_in.length = length_;
    grad_in.data = Eigen::Map<const Matrix<Scalar>>(grad_out.data.data(), grad_out.batch * length_, channels_);
    return grad_in;
  }

 private:
  Index length_ = 0;
  Index channels_ = 0;
};

/// Fully connected layer: out = in * W + b with W shaped (inputs, outputs).
template <typename Scalar>
class Dense {
 public:
  Dense(Index inputs, Index outputs, std::string name = "dense")
      : inputs_(inputs), outputs_(outputs),
        weight_(name + ".weight", inputs, outputs), bias_(name + ".bias", 1, outputs) {}

  Index inputs() const { return inputs_; }
  Index outputs() const { return outputs_; }

  template <typename Rng>
  void init_he_uniform(Rng& rng) {
    fill_uniform(weight_.value, std::sqrt(6.0 / static_cast<double>(inputs_)), rng);
    bias_.value.setZero();
  }

  template <typename Rng>
  void init_glorot_uniform(Rng& rng, double gain = 1.0) {
    fill_uniform(weight_.value, gain * std::sqrt(6.0 / static_cast<double>(inputs_ + outputs_)), rng);
    bias_.value.setZero();
  }

  Batch<Scalar> forward(const Batch<Scalar>& in) {
    if (in.length != 1 || in.channels() != inputs_) {
      throw ShapeError(weight_.name + ": expected " + std::to_string(inputs_) +
                       " flat inputs, got length " + std::to_string(in.length) + " x " +
                       std::to_string(in.channels()));
    }
    input_ = in.data;
    Batch<Scalar> out;
    out.batch = in.batch;
    out.length = 1;
    out.data.noalias() = in.data * weight_.value;
    out.data.rowwise() += bias_.value.row(0);
    return out;
  }

  Batch<Scalar> backward(const Batch<Scalar>& grad_out) {
    weight_.grad.noalias() = input_.transpose() * grad_out.data;
    bias_.grad = grad_out.data.colwise().sum();
    Batch<Scalar> grad_in;
    grad_in.batch = grad_out.batch;
    grad_in.length = 1;
    grad_in.data.noalias() = grad_out.data * weight_.value.transpose();
    return grad_in;
  }

  Param<Scalar>& weight() { return weight_; }
  Param<Scalar>& bias() { return bias_; }
  const Param<Scalar>& weight() const { return weight_; }
  const Param<Scalar>& bias() const { return bias_; }

 private:
  Index inputs_;
  Index outputs_;
  Param<Scalar> weight_;
  Param<Scalar> bias_;
  Matrix<Scalar> input_;
};

template <typename Scalar>
struct SoftmaxXent {
  Scalar loss;
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> probabilities;
};

/// Max-subtracted softmax and cross-entropy -log p[target] for one logit row.
template <typename Derived>
SoftmaxXent<typename Derived::Scalar> softmax_xent(const Eigen::MatrixBase<Derived>& logits,
                                                   Index target) {
  using Scalar = typename Derived::Scalar;
  const Index n = logits.size();
  if (n < 2) throw ShapeError("softmax_xent: need at least 2 classes");
  if (target < 0 || target >= n) {
    throw ShapeError("softmax_xent: target " + std::to_string(target) + " outside [0, " +
                     std::to_string(n) + ")");
  }
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row(n);
  for (Index i = 0; i < n; ++i) row(i) = logits(i);
  const Scalar top = row.maxCoeff();
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> e = (row.array() - top).exp().matrix();
  const Scalar z = e.sum();
  SoftmaxXent<Scalar> r;
  r.probabilities = e / z;
  r.loss = std::log(z) - (row(target) - top);
  return r;
}

/// Row-wise softmax of a logits matrix.
template <typename Scalar>
Matrix<Scalar> softmax_rows(const Matrix<Scalar>& logits) {
  Matrix<Scalar> p = (logits.colwise() - logits.rowwise().maxCoeff()).array().exp().matrix();
  p.array().colwise() /= p.array().rowwise().sum();
  return p;
}

/// Weighted cross-entropy over a batch of logits.
///
/// Returns sum_i weight_i * loss_i and writes weight_i * (p_i - onehot_i) into
/// `grad_logits`. Rows with weight exactly 0 contribute neither loss nor
/// gradient, and their targets are not inspected.
template <typename Scalar>
Scalar weighted_xent(const Matrix<Scalar>& logits, const std::vector<int>& targets,
                     const std::vector<Scalar>& weights, Matrix<Scalar>& grad_logits,
                     Matrix<Scalar>* probabilities = nullptr) {
  const Index n = logits.rows();
  const Index classes = logits.cols();
  if (static_cast<Index>(targets.size()) != n || static_cast<Index>(weights.size()) != n) {
    throw ShapeError("weighted_xent: targets/weights size mismatch");
  }
  Matrix<Scalar> p = softmax_rows(logits);
  grad_logits = Matrix<Scalar>::Zero(n, classes);
  Scalar total = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar w = weights[static_cast<std::size_t>(i)];
    if (w == Scalar(0)) continue;
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= classes) {
      throw ShapeError("weighted_xent: target " + std::to_string(t) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
    const Scalar top = logits.row(i).maxCoeff();
    const Scalar lse = top + std::log((logits.row(i).array() - top).exp().sum());
    total += w * (lse - logits(i, t));
    grad_logits.row(i) = w * p.row(i);
    grad_logits(i, t) -= w;
  }
  if (probabilities != nullptr) *probabilities = std::move(p);
  return total;
}

}  // namespace mtltc::nn
