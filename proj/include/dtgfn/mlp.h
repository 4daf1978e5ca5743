// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dtgfn/random.h"

namespace dtgfn {

using Matrix = Eigen::MatrixXd;

// softplus(x) = log(1 + e^x), the smooth rectifier used between layers.
Matrix Softplus(const Matrix& x);
// d/dx softplus(x) = sigmoid(x).
Matrix SoftplusGrad(const Matrix& x);

struct DenseLayer {
  Matrix weight;  // fan_in x fan_out
  Matrix bias;    // 1 x fan_out
};

// Activations recorded by Mlp::Forward for the reverse pass.
struct MlpTrace {
  std::vector<Matrix> inputs;  // input of each layer
  std::vector<Matrix> pre;     // pre-activation output of each layer
};

// Fully connected network over row-major batches (one sample per row).
// Hidden layers use softplus; the last layer is linear unless
// activate_output is set.
class Mlp {
 public:
  Mlp() = default;
  // sizes = {in, hidden..., out}. Weights use fan-in uniform scaling;
  // zero_output zero-initializes the last layer.
  Mlp(const std::vector<int>& sizes, bool activate_output, bool zero_output, Rng& rng);

  Matrix Forward(const Matrix& x, MlpTrace* trace = nullptr) const;

  // Reverse pass: accumulates dL/dparams into `grads` (an Mlp of identical
  // shape) and returns dL/dx.
  Matrix Backward(const MlpTrace& trace, const Matrix& grad_out, Mlp& grads) const;

  Mlp ZerosLike() const;
  std::vector<Matrix*> Parameters();
  std::vector<const Matrix*> Parameters() const;
  std::size_t NumParameters() const;

  int input_size() const { return static_cast<int>(layers_.front().weight.rows()); }
  int output_size() const { return static_cast<int>(layers_.back().weight.cols()); }
  bool activate_output() const { return activate_output_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
  bool activate_output_ = false;
};

}  // namespace dtgfn
