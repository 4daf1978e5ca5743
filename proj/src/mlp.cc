// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtgfn/mlp.h"

#include <cmath>

#include "dtgfn/error.h"

namespace dtgfn {

Matrix Softplus(const Matrix& x) {
  return x.unaryExpr([](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); });
}

Matrix SoftplusGrad(const Matrix& x) {
  return x.unaryExpr([](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Mlp::Mlp(const std::vector<int>& sizes, bool activate_output, bool zero_output, Rng& rng)
    : activate_output_(activate_output) {
  if (sizes.size() < 2) throw Error(ErrorCode::kInvalidArgument, "mlp needs >= 2 sizes");
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer;
    layer.weight = Matrix::Zero(sizes[l], sizes[l + 1]);
    layer.bias = Matrix::Zero(1, sizes[l + 1]);
    const bool last = l + 2 == sizes.size();
    if (!(last && zero_output)) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
        layer.weight.data()[i] = bound * (2.0 * rng.Uniform() - 1.0);
      }
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
        layer.bias.data()[i] = bound * (2.0 * rng.Uniform() - 1.0);
      }
    }
    layers_.push_back(std::move(layer));
  }
}

Matrix Mlp::Forward(const Matrix& x, MlpTrace* trace) const {
  if (trace) {
    trace->inputs.clear();
    trace->pre.clear();
  }
  Matrix h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = h * layers_[l].weight;
    z.rowwise() += layers_[l].bias.row(0);
    const bool activate = l + 1 < layers_.size() || activate_output_;
    if (trace) {
      trace->inputs.push_back(std::move(h));
      trace->pre.push_back(z);
    }
    h = activate ? Softplus(z) : std::move(z);
  }
  return h;
}

Matrix Mlp::Backward(const MlpTrace& trace, const Matrix& grad_out, Mlp& grads) const {
  Matrix g = grad_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const bool activate = l + 1 < layers_.size() || activate_output_;
    if (activate) g = g.cwiseProduct(SoftplusGrad(trace.pre[l]));
    grads.layers_[l].weight.noalias() += trace.inputs[l].transpose() * g;
    grads.layers_[l].bias += g.colwise().sum();
    g = g * layers_[l].weight.transpose();
  }
  return g;
}

Mlp Mlp::ZerosLike() const {
  Mlp z = *this;
  for (auto& layer : z.layers_) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  return z;
}

std::vector<Matrix*> Mlp::Parameters() {
  std::vector<Matrix*> out;
  for (auto& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

std::vector<const Matrix*> Mlp::Parameters() const {
  std::vector<const Matrix*> out;
  for (const auto& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

std::size_t Mlp::NumParameters() const {
  std::size_t n = 0;
  for (const auto* p : Parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

}  // namespace dtgfn
