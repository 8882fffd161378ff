#ifndef MARGIN_FORGE_KERNEL_HPP
#define MARGIN_FORGE_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <variant>

#include "margin_forge/errors.hpp"
#include "margin_forge/feature_vector.hpp"

namespace margin_forge {

struct LinearKernel {
  friend bool operator==(const LinearKernel&, const LinearKernel&) = default;
};

/// (gamma * <a,b> + coef0)^degree
struct PolynomialKernel {
  int degree = 3;
  double coef0 = 0.0;
  double gamma = 1.0;
  friend bool operator==(const PolynomialKernel&, const PolynomialKernel&) = default;
};

/// exp(-gamma * |a-b|^2)
struct RbfKernel {
  double gamma = 1.0;
  friend bool operator==(const RbfKernel&, const RbfKernel&) = default;
};

class Kernel {
 public:
  using Kind = std::variant<LinearKernel, PolynomialKernel, RbfKernel>;

  Kernel() = default;
  Kernel(LinearKernel k) : kind_(k) {}
  Kernel(PolynomialKernel k) : kind_(k) { validate(); }
  Kernel(RbfKernel k) : kind_(k) { validate(); }

  static Kernel linear() { return Kernel(LinearKernel{}); }
  static Kernel polynomial(int degree, double coef0, double gamma) {
    return Kernel(PolynomialKernel{degree, coef0, gamma});
  }
  static Kernel rbf(double gamma) { return Kernel(RbfKernel{gamma}); }

  const Kind& kind() const noexcept { return kind_; }
  bool is_linear() const noexcept { return std::holds_alternative<LinearKernel>(kind_); }

  /// Kernel value given the inner product and squared norms of the operands.
  /// Every supported kernel is a function of these three numbers.
  double from_products(double dot, double sq_norm_a, double sq_norm_b) const {
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, LinearKernel>) {
            return dot;
          } else if constexpr (std::is_same_v<K, PolynomialKernel>) {
            return std::pow(k.gamma * dot + k.coef0, k.degree);
          } else {
            // Clamp: rounding can make the distance slightly negative.
            const double d2 = std::max(0.0, sq_norm_a + sq_norm_b - 2.0 * dot);
            return std::exp(-k.gamma * d2);
          }
        },
        kind_);
  }

  std::string describe() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, LinearKernel>) {
            return "linear";
          } else if constexpr (std::is_same_v<K, PolynomialKernel>) {
            return "polynomial(degree=" + std::to_string(k.degree) +
                   ", coef0=" + std::to_string(k.coef0) + ", gamma=" + std::to_string(k.gamma) + ")";
          } else {
            return "rbf(gamma=" + std::to_string(k.gamma) + ")";
          }
        },
        kind_);
  }

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  void validate() const {
    if (const auto* p = std::get_if<PolynomialKernel>(&kind_)) {
      if (p->degree < 1) throw InvalidDataError("polynomial degree must be >= 1");
      if (!(p->gamma > 0.0) || !std::isfinite(p->gamma) || !std::isfinite(p->coef0)) {
        throw InvalidDataError("polynomial kernel needs finite gamma > 0 and finite coef0");
      }
    } else if (const auto* r = std::get_if<RbfKernel>(&kind_)) {
      if (!(r->gamma > 0.0) || !std::isfinite(r->gamma)) {
        throw InvalidDataError("rbf kernel needs finite gamma > 0");
      }
    }
  }

  Kind kind_ = LinearKernel{};
};

/// K(a, b). Throws DimensionError when the operands live in different spaces.
inline double kernel_eval(const Kernel& k, const FeatureVector& a, const FeatureVector& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("kernel operands have dimensions " + std::to_string(a.dim()) + " and " +
                         std::to_string(b.dim()));
  }
  const double dot = sparse_dot(a, b);
  if (k.is_linear()) return dot;
  return k.from_products(dot, a.squared_norm(), b.squared_norm());
}

}  // namespace margin_forge

#endif  // MARGIN_FORGE_KERNEL_HPP
