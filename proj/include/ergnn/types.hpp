#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ergnn {

// All training math is 64-bit.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

using NodeId = std::int32_t;

/// Shape or arity mismatch between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input data violates a documented invariant (bad config, bad dataset, ...).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed file content; message carries file and line.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operation called on an object in the wrong state.
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Filesystem / stream failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

inline void require_same_shape(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_str(a) +
                         " vs " + shape_str(b));
  }
}

/// A trainable tensor: value plus accumulated gradient of the same shape.
struct Parameter {
  Mat value;
  Mat grad;

  Parameter() = default;
  Parameter(Eigen::Index rows, Eigen::Index cols)
      : value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}
  explicit Parameter(Mat v) : value(std::move(v)) {
    grad = Mat::Zero(value.rows(), value.cols());
  }

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  void zero_grad() { grad.setZero(); }
};

/// Per-parameter Adam moment estimates.
struct AdamState {
  Mat m;
  Mat v;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(const Parameter& p)
      : m(Mat::Zero(p.rows(), p.cols())), v(Mat::Zero(p.rows(), p.cols())) {}
};

}  // namespace ergnn
