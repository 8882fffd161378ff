#ifndef MARGIN_FORGE_MODEL_HPP
#define MARGIN_FORGE_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "margin_forge/errors.hpp"
#include "margin_forge/feature_vector.hpp"
#include "margin_forge/kernel.hpp"

namespace margin_forge {

/// Trained classifier: f(x) = sum_i coef_i * K(sv_i, x) + bias.
///
/// Each coefficient is alpha_i * y_i of the training run. For the linear
/// kernel the hyperplane normal w = sum_i coef_i * sv_i is materialised
/// once and decision values use it directly.
///
/// Immutable after construction, so concurrent decision_value/predict calls
/// on a shared instance need no locking.
class Model {
 public:
  Model(Kernel kernel, double bias, std::vector<FeatureVector> support_vectors,
        std::vector<double> sv_coefficients, std::size_t dim, double c_bound = 0.0)
      : kernel_(std::move(kernel)),
        bias_(bias),
        support_vectors_(std::move(support_vectors)),
        sv_coefficients_(std::move(sv_coefficients)),
        dim_(dim),
        c_bound_(c_bound) {
    if (support_vectors_.empty() || support_vectors_.size() != sv_coefficients_.size()) {
      throw InvalidDataError("model needs at least one support vector and one coefficient per vector");
    }
    if (!std::isfinite(bias_)) throw InvalidDataError("model bias is not finite");
    for (std::size_t i = 0; i < support_vectors_.size(); ++i) {
      if (support_vectors_[i].dim() != dim_) {
        throw DimensionError("support vector " + std::to_string(i) + " has dimension " +
                             std::to_string(support_vectors_[i].dim()) + ", model has " +
                             std::to_string(dim_));
      }
      if (!std::isfinite(sv_coefficients_[i])) {
        throw InvalidDataError("support vector coefficient is not finite");
      }
    }
    if (kernel_.is_linear()) {
      std::vector<double> w(dim_, 0.0);
      for (std::size_t i = 0; i < support_vectors_.size(); ++i) {
        for (const Entry& e : support_vectors_[i].entries()) {
          w[e.index - 1] += sv_coefficients_[i] * e.value;
        }
      }
      explicit_weights_ = std::move(w);
    }
  }

  const Kernel& kernel() const noexcept { return kernel_; }
  double bias() const noexcept { return bias_; }
  std::span<const FeatureVector> support_vectors() const noexcept { return support_vectors_; }
  std::span<const double> sv_coefficients() const noexcept { return sv_coefficients_; }
  std::size_t dim() const noexcept { return dim_; }
  /// C of the run that produced the model; 0 when unknown.
  double c_bound() const noexcept { return c_bound_; }
  const std::optional<std::vector<double>>& explicit_weights() const noexcept {
    return explicit_weights_;
  }

  /// Decision value through the support-vector expansion, never the fast path.
  double expansion_value(const FeatureVector& x) const {
    check_dim(x);
    double s = 0.0;
    const double xx = x.squared_norm();
    for (std::size_t i = 0; i < support_vectors_.size(); ++i) {
      const FeatureVector& sv = support_vectors_[i];
      const double dot = sparse_dot(sv, x);
      const double k = kernel_.is_linear() ? dot : kernel_.from_products(dot, sv.squared_norm(), xx);
      s += sv_coefficients_[i] * k;
    }
    return s + bias_;
  }

  void check_dim(const FeatureVector& x) const {
    if (x.dim() != dim_) {
      throw DimensionError("input has dimension " + std::to_string(x.dim()) + ", model expects " +
                           std::to_string(dim_));
    }
  }

 private:
  Kernel kernel_;
  double bias_;
  std::vector<FeatureVector> support_vectors_;
  std::vector<double> sv_coefficients_;
  std::size_t dim_;
  double c_bound_;
  std::optional<std::vector<double>> explicit_weights_;
};

/// f(x). Uses the explicit weight vector when the model has one.
inline double decision_value(const Model& m, const FeatureVector& x) {
  m.check_dim(x);
  if (const auto& w = m.explicit_weights()) {
    double s = 0.0;
    for (const Entry& e : x.entries()) s += (*w)[e.index - 1] * e.value;
    return s + m.bias();
  }
  return m.expansion_value(x);
}

/// Sign of f(x); a decision value of exactly zero maps to +1.
inline Label predict(const Model& m, const FeatureVector& x) {
  return decision_value(m, x) >= 0.0 ? Label::positive() : Label::negative();
}

/// Geometric margin width 2/||w|| with ||w||^2 = sum_ij c_i c_j K(sv_i, sv_j).
inline double margin_width(const Model& m) {
  double w2 = 0.0;
  if (const auto& w = m.explicit_weights()) {
    for (double v : *w) w2 += v * v;
  } else {
    const auto svs = m.support_vectors();
    const auto coef = m.sv_coefficients();
    for (std::size_t i = 0; i < svs.size(); ++i) {
      for (std::size_t j = 0; j < svs.size(); ++j) w2 += coef[i] * coef[j] * kernel_eval(m.kernel(), svs[i], svs[j]);
    }
  }
  return w2 > 0.0 ? 2.0 / std::sqrt(w2) : std::numeric_limits<double>::infinity();
}

inline double hinge_loss(double margin) noexcept { return std::max(0.0, 1.0 - margin); }

/// Sum of max(0, 1 - y f(x)) over `data`.
inline double total_slack(const Model& m, std::span<const Example> data) {
  double s = 0.0;
  for (const Example& ex : data) s += hinge_loss(ex.y.as_double() * decision_value(m, ex.x));
  return s;
}

}  // namespace margin_forge

#endif  // MARGIN_FORGE_MODEL_HPP
