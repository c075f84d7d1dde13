#include "ergnn/nn.hpp"

#include <cmath>

namespace ergnn::nn {

namespace {
constexpr double kBceEps = 1e-12;
}

Mat linear_forward(const Parameter& W, const Parameter& b, const Mat& x) {
  if (x.cols() != W.cols()) {
    throw DimensionError("linear_forward: input " + shape_str(x) +
                         " does not match weight " + shape_str(W.value));
  }
  if (b.rows() != 1 || b.cols() != W.rows()) {
    throw DimensionError("linear_forward: bias " + shape_str(b.value) +
                         " does not match weight " + shape_str(W.value));
  }
  Mat y = x * W.value.transpose();
  y.rowwise() += b.value.row(0);
  return y;
}

Mat linear_backward(Parameter& W, Parameter& b, const Mat& x, const Mat& grad_out) {
  if (grad_out.rows() != x.rows() || grad_out.cols() != W.rows()) {
    throw DimensionError("linear_backward: grad " + shape_str(grad_out) +
                         " does not match weight " + shape_str(W.value) +
                         " and input " + shape_str(x));
  }
  W.grad.noalias() += grad_out.transpose() * x;
  b.grad.row(0) += grad_out.colwise().sum();
  return grad_out * W.value;
}

Mat relu(const Mat& x) { return x.array().max(0.0).matrix(); }

Mat relu_backward(const Mat& x, const Mat& grad_out) {
  require_same_shape(x, grad_out, "relu_backward");
  return ((x.array() > 0.0).cast<double>() * grad_out.array()).matrix();
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Mat sigmoid(const Mat& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

double bce_loss(const Mat& p, const Mat& y) {
  require_same_shape(p, y, "bce_loss");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double pc = std::min(1.0 - kBceEps, std::max(kBceEps, p(i, j)));
      loss -= y(i, j) * std::log(pc) + (1.0 - y(i, j)) * std::log(1.0 - pc);
    }
  }
  return loss;
}

Mat bce_logit_grad(const Mat& p, const Mat& y) {
  require_same_shape(p, y, "bce_logit_grad");
  return p - y;
}

void adam_step(Parameter& param, AdamState& state, double lr) {
  if (state.m.rows() != param.rows() || state.m.cols() != param.cols()) {
    throw DimensionError("adam_step: state " + shape_str(state.m) +
                         " does not match parameter " + shape_str(param.value));
  }
  if (lr <= 0.0) {
    throw ValidationError("adam_step: learning rate must be positive");
  }
  state.step_count += 1;
  const auto& g = param.grad;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * g;
  state.v = state.beta2 * state.v.array().matrix() +
            (1.0 - state.beta2) * g.array().square().matrix();
  const double m_corr = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double v_corr = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  param.value.array() -=
      lr * (state.m.array() / m_corr) /
      ((state.v.array() / v_corr).sqrt() + state.epsilon);
}

Mat finite_diff_grad(Parameter& param, double step,
                     const std::function<double()>& loss_fn) {
  if (step <= 0.0) {
    throw ValidationError("finite_diff_grad: step must be positive");
  }
  Mat grad(param.rows(), param.cols());
  for (Eigen::Index i = 0; i < param.rows(); ++i) {
    for (Eigen::Index j = 0; j < param.cols(); ++j) {
      const double saved = param.value(i, j);
      param.value(i, j) = saved + step;
      const double up = loss_fn();
      param.value(i, j) = saved - step;
      const double down = loss_fn();
      param.value(i, j) = saved;
      grad(i, j) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

}  // namespace ergnn::nn
