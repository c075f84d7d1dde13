#pragma once

#include <functional>

#include "ergnn/types.hpp"

// Dense layer primitives with explicit per-layer backward functions. The
// network is fixed-depth and tiny, so there is no autodiff tape: each forward
// has a matching backward that consumes the cached forward inputs.
namespace ergnn::nn {

/// y = x * W^T + b, with W of shape (d_out x d_in) and b a row vector (1 x d_out).
Mat linear_forward(const Parameter& W, const Parameter& b, const Mat& x);

/// Accumulates dL/dW and dL/db into the parameter grads and returns dL/dx.
/// `x` must be the same matrix passed to the matching linear_forward call.
Mat linear_backward(Parameter& W, Parameter& b, const Mat& x, const Mat& grad_out);

/// Elementwise max(0, x).
Mat relu(const Mat& x);

/// Passes gradient only where the forward input was > 0 (subgradient 0 at 0).
Mat relu_backward(const Mat& x, const Mat& grad_out);

/// Elementwise logistic function, numerically stable for large |x|.
Mat sigmoid(const Mat& x);
double sigmoid(double x);

/// Binary cross-entropy, summed over entries, with probabilities clamped to
/// [eps, 1-eps], eps = 1e-12. p and y must have equal shapes; y in {0, 1}.
double bce_loss(const Mat& p, const Mat& y);

/// Gradient of bce_loss w.r.t. pre-sigmoid logits, in the fused form p - y.
Mat bce_logit_grad(const Mat& p, const Mat& y);

/// One Adam update with bias correction. The gradient is read from
/// param.grad and left untouched; the caller zeroes it.
void adam_step(Parameter& param, AdamState& state, double lr);

/// Central-difference gradient estimate of loss_fn w.r.t. every entry of
/// param.value. Perturbs entries in place and restores them. Test harness.
Mat finite_diff_grad(Parameter& param, double step,
                     const std::function<double()>& loss_fn);

}  // namespace ergnn::nn
