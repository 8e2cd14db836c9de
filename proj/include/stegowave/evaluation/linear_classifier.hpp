#pragma once

// L2-regularized logistic regression on standardized features, trained
// full-batch with Adam. Deterministic: the weights start at zero.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "stegowave/core/error.hpp"

namespace stegowave {

struct LinearClassifierConfig {
  std::size_t iterations = 400;
  double learning_rate = 0.01;
  double l2 = 1e-3;
};

class LogisticRegression {
 public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// Rows of `x` are samples; labels are 0/1.
  void fit(const Matrix& x, const std::vector<int>& labels, const LinearClassifierConfig& cfg = {}) {
    const auto n = x.rows(), d = x.cols();
    if (n == 0 || static_cast<std::size_t>(n) != labels.size()) throw ShapeError("logistic regression: bad training set");
    mean_ = x.colwise().mean();
    scale_ = ((x.rowwise() - mean_).array().square().colwise().sum() / static_cast<double>(n)).sqrt();
    for (Eigen::Index j = 0; j < d; ++j) scale_(j) = scale_(j) > 1e-12 ? 1.0 / scale_(j) : 0.0;
    const Matrix z = standardize(x);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)] != 0 ? 1.0 : 0.0;

    w_ = Eigen::VectorXd::Zero(d);
    b_ = 0.0;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(d), v = Eigen::VectorXd::Zero(d);
    double mb = 0.0, vb = 0.0;
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
      const Eigen::VectorXd p = sigmoid((z * w_).array() + b_);
      const Eigen::VectorXd r = (p - y) / static_cast<double>(n);
      const Eigen::VectorXd gw = z.transpose() * r + cfg.l2 * w_;
      const double gb = r.sum();
      m = b1 * m + (1 - b1) * gw;
      v = b2 * v + (1 - b2) * gw.cwiseProduct(gw);
      mb = b1 * mb + (1 - b1) * gb;
      vb = b2 * vb + (1 - b2) * gb * gb;
      const double c1 = 1 - std::pow(b1, static_cast<double>(t)), c2 = 1 - std::pow(b2, static_cast<double>(t));
      w_.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
      b_ -= cfg.learning_rate * (mb / c1) / (std::sqrt(vb / c2) + eps);
    }
  }

  /// Probability of class 1 for each row.
  Eigen::VectorXd predict_proba(const Matrix& x) const {
    if (x.cols() != w_.size()) throw ShapeError("logistic regression: feature dimension mismatch");
    return sigmoid((standardize(x) * w_).array() + b_);
  }

  double accuracy(const Matrix& x, const std::vector<int>& labels) const {
    const Eigen::VectorXd p = predict_proba(x);
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) correct += (p(i) >= 0.5 ? 1 : 0) == (labels[static_cast<std::size_t>(i)] != 0 ? 1 : 0);
    return static_cast<double>(correct) / static_cast<double>(p.size());
  }

 private:
  Matrix standardize(const Matrix& x) const { return (x.rowwise() - mean_).array().rowwise() * scale_.array(); }

  static Eigen::VectorXd sigmoid(const Eigen::ArrayXd& a) { return (1.0 / (1.0 + (-a).exp())).matrix(); }

  Eigen::RowVectorXd mean_, scale_;
  Eigen::VectorXd w_;
  double b_ = 0.0;
};

}  // namespace stegowave
