#ifndef MARGIN_FORGE_SMO_HPP
#define MARGIN_FORGE_SMO_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "margin_forge/errors.hpp"
#include "margin_forge/feature_vector.hpp"
#include "margin_forge/kernel.hpp"
#include "margin_forge/model.hpp"
#include "margin_forge/random.hpp"

namespace margin_forge {

struct TrainConfig {
  /// Soft-margin penalty C: upper bound of every dual variable.
  double c_bound = 1.0;
  Kernel kernel = Kernel::linear();
  double kkt_tolerance = 1e-3;
  /// Cap on two-variable subproblem steps.
  std::uint64_t max_passes = 10'000'000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!std::isfinite(c_bound) || !(c_bound > 0.0)) {
      throw InvalidDataError("C bound must be finite and > 0");
    }
    if (!std::isfinite(kkt_tolerance) || !(kkt_tolerance > 0.0)) {
      throw InvalidDataError("KKT tolerance must be finite and > 0");
    }
    if (max_passes == 0) throw InvalidDataError("max_passes must be > 0");
  }
};

struct TrainDiagnostics {
  double dual_objective = 0.0;
  std::uint64_t iterations = 0;
  std::size_t n_support_vectors = 0;
  /// Support vectors with alpha == C.
  std::size_t n_bounded_svs = 0;
  /// Sum of hinge losses over the training set.
  double total_slack = 0.0;
  double max_kkt_violation = 0.0;
  /// |sum_i alpha_i y_i|
  double balance_residual = 0.0;
};

/// Thrown when the step budget runs out (or the solver stalls) before every
/// KKT condition holds. Carries the diagnostics of the best iterate reached.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, TrainDiagnostics diagnostics)
      : Error(what), diagnostics_(diagnostics) {}

  const TrainDiagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  TrainDiagnostics diagnostics_;
};

struct TrainResult {
  Model model;
  TrainDiagnostics diagnostics;
  /// Dual variables, one per training sample, in input order.
  std::vector<double> alphas;
};

/// Called after every subproblem step with the step count and the dual
/// objective reached.
using IterationObserver = std::function<void(std::uint64_t, double)>;

namespace detail {

/// Per-point KKT violation of y*f(x) against the box state of alpha.
inline double kkt_violation(double alpha, double c_bound, double y_times_f) {
  const double m = y_times_f - 1.0;
  if (alpha <= 0.0) return std::max(0.0, -m);
  if (alpha >= c_bound) return std::max(0.0, m);
  return std::abs(m);
}

/// Sequential minimal optimisation over the dual
///
///   max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
///   s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0.
///
/// The solver tracks F_i = sum_j a_j y_j K_ij - y_i, the prediction error
/// without the bias. With I_up = {y=+1, a<C} u {y=-1, a>0} and
/// I_low = {y=+1, a>0} u {y=-1, a<C}, the point is optimal within tol when
/// max_{I_low} F - min_{I_up} F <= tol. Each step takes the maximal violator
/// from I_low and pairs it with the I_up member that maximises |F_1 - F_2|,
/// which is exactly the maximal violating pair.
class SmoSolver {
 public:
  SmoSolver(std::span<const Example> data, const TrainConfig& config, IterationObserver observer)
      : data_(data), config_(config), observer_(std::move(observer)), rng_(config.seed) {
    n_ = data_.size();
    dim_ = data_.front().x.dim();
    c_ = config_.c_bound;
    y_.resize(n_);
    sq_norm_.resize(n_);
    diag_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      y_[i] = data_[i].y.as_double();
      sq_norm_[i] = data_[i].x.squared_norm();
      diag_[i] = config_.kernel.from_products(sq_norm_[i], sq_norm_[i], sq_norm_[i]);
    }
    scatter_.assign(dim_, 0.0);
    alpha_.assign(n_, 0.0);
    grad_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) grad_[i] = -y_[i];
  }

  TrainResult run() {
    std::uint64_t iterations = 0;
    double dual = 0.0;
    int refreshes = 0;
    bool budget_exhausted = false;
    bool stalled = false;

    for (;;) {
      const Bounds b = bounds();
      // At least one step is taken so the model has a support vector.
      const bool optimal = iterations > 0 && b.low - b.up <= config_.kkt_tolerance;
      if (optimal || stalled || iterations >= config_.max_passes) {
        // Cached F drifts with rounding; confirm against a fresh evaluation.
        rebuild_gradient();
        dual = dual_objective();
        if (iterations > 0 && kkt_holds()) break;
        if (iterations >= config_.max_passes) {
          budget_exhausted = true;
          break;
        }
        if (stalled || ++refreshes > kMaxRefreshes) break;
        continue;
      }

      double gain = 0.0;
      if (!take_step(b.low_index, b.up_index, gain)) {
        if (!random_fallback(b, gain)) {
          stalled = true;
          continue;
        }
      }
      ++iterations;
      dual += gain;
      if (observer_) observer_(iterations, dual);
    }

    TrainResult result = finish(iterations, dual);
    if (budget_exhausted || result.diagnostics.max_kkt_violation > config_.kkt_tolerance) {
      throw ConvergenceError(
          budget_exhausted
              ? "step budget of " + std::to_string(config_.max_passes) + " exhausted before convergence"
              : "solver stalled with KKT violation " +
                    std::to_string(result.diagnostics.max_kkt_violation),
          result.diagnostics);
    }
    return result;
  }

 private:
  static constexpr int kMaxRefreshes = 8;
  static constexpr double kTau = 1e-12;
  static constexpr double kSnap = 1e-12;

  struct Bounds {
    double up = std::numeric_limits<double>::infinity();
    double low = -std::numeric_limits<double>::infinity();
    std::size_t up_index = 0;
    std::size_t low_index = 0;
  };

  bool in_up(std::size_t i) const {
    return y_[i] > 0 ? alpha_[i] < c_ : alpha_[i] > 0.0;
  }
  bool in_low(std::size_t i) const {
    return y_[i] > 0 ? alpha_[i] > 0.0 : alpha_[i] < c_;
  }

  Bounds bounds() const {
    Bounds b;
    for (std::size_t i = 0; i < n_; ++i) {
      if (in_up(i) && grad_[i] < b.up) {
        b.up = grad_[i];
        b.up_index = i;
      }
      if (in_low(i) && grad_[i] > b.low) {
        b.low = grad_[i];
        b.low_index = i;
      }
    }
    return b;
  }

  /// Kernel row K(i, .). The two most recent rows are kept.
  const std::vector<double>& row(std::size_t i) {
    for (unsigned k = 0; k < cache_.size(); ++k) {
      if (cache_[k].valid && cache_[k].index == i) {
        next_slot_ = k ^ 1U;
        return cache_[k].values;
      }
    }
    auto& slot = cache_[next_slot_];
    next_slot_ ^= 1;
    slot.index = i;
    slot.valid = true;
    slot.values.resize(n_);
    const auto entries = data_[i].x.entries();
    for (const Entry& e : entries) scatter_[e.index - 1] = e.value;
    for (std::size_t j = 0; j < n_; ++j) {
      double dot = 0.0;
      for (const Entry& e : data_[j].x.entries()) dot += scatter_[e.index - 1] * e.value;
      slot.values[j] = config_.kernel.from_products(dot, sq_norm_[i], sq_norm_[j]);
    }
    for (const Entry& e : entries) scatter_[e.index - 1] = 0.0;
    return slot.values;
  }

  double snap(double a) const {
    if (a <= kSnap * c_) return 0.0;
    if (a >= c_ - kSnap * c_) return c_;
    return a;
  }

  /// Analytic two-variable update on (i1, i2) with i1 in I_low, i2 in I_up.
  /// Returns false when the pair cannot move. `gain` receives the increase of
  /// the dual objective.
  bool take_step(std::size_t i1, std::size_t i2, double& gain) {
    if (i1 == i2) return false;
    const double y1 = y_[i1];
    const double y2 = y_[i2];
    const double a1 = alpha_[i1];
    const double a2 = alpha_[i2];
    const double s = y1 * y2;

    double lo;
    double hi;
    if (s < 0) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(c_, c_ + a2 - a1);
    } else {
      lo = std::max(0.0, a1 + a2 - c_);
      hi = std::min(c_, a1 + a2);
    }
    if (!(lo < hi)) return false;

    const auto& k1 = row(i1);
    const double k12 = k1[i2];
    double eta = diag_[i1] + diag_[i2] - 2.0 * k12;
    const double true_eta = eta;
    if (eta <= 0.0) eta = kTau;

    const double diff = grad_[i1] - grad_[i2];
    double a2_new = std::clamp(a2 + y2 * diff / eta, lo, hi);
    a2_new = snap(a2_new);
    const double d2 = a2_new - a2;
    if (d2 == 0.0) return false;
    const double a1_new = snap(std::clamp(a1 + s * (a2 - a2_new), 0.0, c_));
    const double d1 = a1_new - a1;

    gain = y2 * d2 * diff - 0.5 * true_eta * d2 * d2;
    alpha_[i1] = a1_new;
    alpha_[i2] = a2_new;

    // row(i2) may evict row(i1); copy the factor we still need first.
    const double c1 = y1 * d1;
    const double c2 = y2 * d2;
    {
      const auto& r1 = row(i1);
      for (std::size_t k = 0; k < n_; ++k) grad_[k] += c1 * r1[k];
    }
    {
      const auto& r2 = row(i2);
      for (std::size_t k = 0; k < n_; ++k) grad_[k] += c2 * r2[k];
    }
    return true;
  }

  /// Seeded partner search used when the maximal pair cannot move.
  bool random_fallback(const Bounds& b, double& gain) {
    const std::size_t tries = std::min<std::size_t>(n_, 64);
    for (std::size_t t = 0; t < tries; ++t) {
      const auto j = static_cast<std::size_t>(rng_.below(n_));
      if (j != b.low_index && in_up(j) && grad_[j] < b.low - config_.kkt_tolerance &&
          take_step(b.low_index, j, gain)) {
        return true;
      }
      const auto i = static_cast<std::size_t>(rng_.below(n_));
      if (i != b.up_index && in_low(i) && grad_[i] > b.up + config_.kkt_tolerance &&
          take_step(i, b.up_index, gain)) {
        return true;
      }
    }
    return false;
  }

  void rebuild_gradient() {
    for (std::size_t i = 0; i < n_; ++i) grad_[i] = -y_[i];
    for (std::size_t j = 0; j < n_; ++j) {
      if (alpha_[j] == 0.0) continue;
      const double cj = alpha_[j] * y_[j];
      const auto& r = row(j);
      for (std::size_t i = 0; i < n_; ++i) grad_[i] += cj * r[i];
    }
  }

  /// Uses grad_: sum a - 1/2 sum a_i y_i (F_i + y_i).
  double dual_objective() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += alpha_[i] * (1.0 - y_[i] * grad_[i]);
    return 0.5 * s;
  }

  /// Bias from the unbounded support vectors, or the midpoint of the feasible
  /// interval when every support vector sits at a bound.
  double bias() const {
    double sum = 0.0;
    std::size_t free = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] > 0.0 && alpha_[i] < c_) {
        sum += grad_[i];
        ++free;
      }
    }
    if (free > 0) return -sum / static_cast<double>(free);
    const Bounds b = bounds();
    if (!std::isfinite(b.up)) return -b.low;
    if (!std::isfinite(b.low)) return -b.up;
    return -0.5 * (b.up + b.low);
  }

  double max_violation(double b) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      worst = std::max(worst, kkt_violation(alpha_[i], c_, y_[i] * (grad_[i] + y_[i] + b)));
    }
    return worst;
  }

  bool kkt_holds() const { return max_violation(bias()) <= config_.kkt_tolerance; }

  TrainResult finish(std::uint64_t iterations, double dual) {
    const double b = bias();
    TrainDiagnostics diag;
    diag.iterations = iterations;
    diag.dual_objective = dual;
    diag.max_kkt_violation = max_violation(b);

    std::vector<FeatureVector> svs;
    std::vector<double> coefs;
    double balance = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      balance += alpha_[i] * y_[i];
      if (alpha_[i] > 0.0) {
        svs.push_back(data_[i].x);
        coefs.push_back(alpha_[i] * y_[i]);
        if (alpha_[i] >= c_) ++diag.n_bounded_svs;
      }
    }
    diag.balance_residual = std::abs(balance);
    diag.n_support_vectors = svs.size();
    if (svs.empty()) {
      throw ConvergenceError("solver finished without any support vector", diag);
    }

    Model model(config_.kernel, b, std::move(svs), std::move(coefs), dim_, c_);
    diag.total_slack = total_slack(model, data_);
    return TrainResult{std::move(model), diag, alpha_};
  }

  struct RowSlot {
    std::size_t index = 0;
    bool valid = false;
    std::vector<double> values;
  };

  std::span<const Example> data_;
  TrainConfig config_;
  IterationObserver observer_;
  Xoshiro256 rng_;
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  double c_ = 0.0;
  std::vector<double> y_;
  std::vector<double> sq_norm_;
  std::vector<double> diag_;
  std::vector<double> scatter_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
  std::array<RowSlot, 2> cache_{};
  unsigned next_slot_ = 0;
};

}  // namespace detail

/// Trains a soft-margin SVM by solving the dual with SMO.
///
/// Requires at least two samples of a common dimension covering both labels.
/// On success every KKT condition holds within `config.kkt_tolerance`. The
/// result depends only on the data order and `config`.
inline TrainResult train(std::span<const Example> data, const TrainConfig& config,
                         IterationObserver observer = {}) {
  config.validate();
  if (data.size() < 2) throw InvalidDataError("training needs at least two samples");
  const std::size_t dim = data.front().x.dim();
  bool has_pos = false;
  bool has_neg = false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].x.dim() != dim) {
      throw DimensionError("sample " + std::to_string(i) + " has dimension " +
                           std::to_string(data[i].x.dim()) + ", expected " + std::to_string(dim));
    }
    for (const Entry& e : data[i].x.entries()) {
      if (!std::isfinite(e.value)) throw InvalidDataError("non-finite feature in sample " + std::to_string(i));
    }
    (data[i].y.is_positive() ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw SingleClassError("training data contains a single class");
  return detail::SmoSolver(data, config, std::move(observer)).run();
}

}  // namespace margin_forge

#endif  // MARGIN_FORGE_SMO_HPP
