#ifndef MARGIN_FORGE_EVAL_HPP
#define MARGIN_FORGE_EVAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "margin_forge/errors.hpp"
#include "margin_forge/feature_vector.hpp"
#include "margin_forge/model.hpp"
#include "margin_forge/random.hpp"
#include "margin_forge/smo.hpp"

namespace margin_forge {

/// One evaluation row. postoneg counts +1-labeled samples predicted -1,
/// negtopos counts -1-labeled samples predicted +1.
struct ConfusionReport {
  std::size_t n_total = 0;
  std::size_t n_pos_labeled = 0;
  std::size_t n_neg_labeled = 0;
  double c_bound = 0.0;
  std::size_t misclassified = 0;
  std::size_t postoneg = 0;
  std::size_t negtopos = 0;

  /// Builds a row from its independent counts; misclassified is derived.
  static ConfusionReport from_counts(std::size_t n_pos, std::size_t n_neg, double c_bound,
                                     std::size_t postoneg, std::size_t negtopos) {
    ConfusionReport r{n_pos + n_neg, n_pos, n_neg, c_bound, postoneg + negtopos, postoneg, negtopos};
    if (!r.consistent()) throw InvalidDataError("error counts exceed the labeled counts");
    return r;
  }

  bool consistent() const noexcept {
    return misclassified == postoneg + negtopos && postoneg <= n_pos_labeled &&
           negtopos <= n_neg_labeled && n_pos_labeled + n_neg_labeled == n_total;
  }

  friend bool operator==(const ConfusionReport&, const ConfusionReport&) = default;
};

inline ConfusionReport evaluate(const Model& m, std::span<const Example> data, double c_bound) {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t postoneg = 0;
  std::size_t negtopos = 0;
  for (const auto& ex : data) {
    const Label predicted = predict(m, ex.x);
    if (ex.y.is_positive()) {
      ++n_pos;
      if (!predicted.is_positive()) ++postoneg;
    } else {
      ++n_neg;
      if (predicted.is_positive()) ++negtopos;
    }
  }
  return ConfusionReport::from_counts(n_pos, n_neg, c_bound, postoneg, negtopos);
}

inline constexpr std::array<const char*, 8> kReportColumns = {
    "Test",          "No of Patients", "+1 labeled", "-1 labeled", "C(bound)",
    "Misclassified", "postoneg",       "negtopos"};

namespace detail {

inline std::string format_c(double c) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%g", c);
  return std::string(buf, static_cast<std::size_t>(len));
}

inline std::vector<std::array<std::string, 8>> report_cells(std::span<const ConfusionReport> reports) {
  std::vector<std::array<std::string, 8>> rows;
  rows.reserve(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    rows.push_back({std::to_string(i + 1), std::to_string(r.n_total), std::to_string(r.n_pos_labeled),
                    std::to_string(r.n_neg_labeled), format_c(r.c_bound), std::to_string(r.misclassified),
                    std::to_string(r.postoneg), std::to_string(r.negtopos)});
  }
  return rows;
}

}  // namespace detail

/// Fixed-width table, one numbered row per report:
///
///   Test | No of Patients | +1 labeled | -1 labeled | C(bound) | Misclassified | postoneg | negtopos
///
/// A non-empty `title` is printed on its own line above the header.
inline std::string render_report(std::span<const ConfusionReport> reports, const std::string& title = {}) {
  if (reports.empty()) throw InvalidDataError("render_report needs at least one report");
  const auto rows = detail::report_cells(reports);
  std::array<std::size_t, 8> width{};
  for (std::size_t c = 0; c < 8; ++c) {
    width[c] = std::string(kReportColumns[c]).size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }

  std::string out;
  if (!title.empty()) out += title + '\n';
  auto line = [&](auto cell_of, bool right_align) {
    std::string s;
    for (std::size_t c = 0; c < 8; ++c) {
      const std::string cell = cell_of(c);
      const std::string pad(width[c] - cell.size(), ' ');
      if (c > 0) s += " | ";
      s += right_align ? pad + cell : cell + pad;
    }
    out += s + '\n';
  };
  line([](std::size_t c) { return std::string(kReportColumns[c]); }, false);
  {
    std::string rule;
    for (std::size_t c = 0; c < 8; ++c) {
      if (c > 0) rule += "-+-";
      rule += std::string(width[c], '-');
    }
    out += rule + '\n';
  }
  for (const auto& row : rows) line([&](std::size_t c) { return row[c]; }, true);
  return out;
}

/// Same columns as render_report, comma separated.
inline std::string render_report_csv(std::span<const ConfusionReport> reports) {
  if (reports.empty()) throw InvalidDataError("render_report_csv needs at least one report");
  std::string out;
  for (std::size_t c = 0; c < 8; ++c) {
    if (c > 0) out += ',';
    out += kReportColumns[c];
  }
  out += '\n';
  for (const auto& row : detail::report_cells(reports)) {
    for (std::size_t c = 0; c < 8; ++c) {
      if (c > 0) out += ',';
      out += row[c];
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits

/// Stratified, seeded train/test split. Each split keeps the input order.
/// A class with at least two members is represented in both splits.
inline std::pair<Dataset, Dataset> split(std::span<const Example> data, double fraction, std::uint64_t seed) {
  if (data.size() < 2) throw InvalidDataError("split needs at least two samples");
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidDataError("split fraction must lie in (0, 1)");
  const std::size_t n = data.size();

  std::array<std::vector<std::size_t>, 2> members;  // [0] = +1, [1] = -1
  for (std::size_t i = 0; i < n; ++i) members[data[i].y.is_positive() ? 0 : 1].push_back(i);

  const auto target = static_cast<std::size_t>(
      std::clamp<long long>(std::llround(fraction * static_cast<double>(n)), 1, static_cast<long long>(n) - 1));

  // Largest-remainder apportionment of the training quota between classes.
  std::array<std::size_t, 2> take{};
  std::array<double, 2> remainder{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    const double quota = fraction * static_cast<double>(members[c].size());
    take[c] = static_cast<std::size_t>(std::floor(quota));
    remainder[c] = quota - std::floor(quota);
    assigned += take[c];
  }
  while (assigned < target) {
    const std::size_t c = remainder[0] >= remainder[1] ? 0 : 1;
    const std::size_t pick = take[c] < members[c].size() ? c : 1 - c;
    ++take[pick];
    remainder[pick] = -1.0;
    ++assigned;
  }
  for (std::size_t c = 0; c < 2; ++c) {
    const std::size_t size = members[c].size();
    if (size < 2) continue;
    const std::size_t other = 1 - c;
    const std::size_t other_min = members[other].size() >= 2 ? 1 : 0;
    const std::size_t other_max = members[other].size() - other_min;
    if (take[c] == 0) {
      take[c] = 1;
      if (take[other] > other_min) --take[other];
    } else if (take[c] == size) {
      take[c] = size - 1;
      if (take[other] < other_max) ++take[other];
    }
  }

  Xoshiro256 rng(seed);
  std::vector<bool> in_train(n, false);
  for (std::size_t c = 0; c < 2; ++c) {
    auto order = members[c];
    shuffle(order, rng);
    for (std::size_t k = 0; k < take[c]; ++k) in_train[order[k]] = true;
  }
  std::pair<Dataset, Dataset> out;
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? out.first : out.second).push_back(data[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic cohorts

struct SyntheticCohortSpec {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> planted_weights;
  double planted_bias = 0.0;
  double label_noise_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n == 0 || dim == 0) throw InvalidDataError("cohort needs n > 0 and dim > 0");
    if (planted_weights.size() != dim) throw DimensionError("planted weights must have length dim");
    if (std::none_of(planted_weights.begin(), planted_weights.end(), [](double w) { return w != 0.0; })) {
      throw InvalidDataError("planted weights are all zero");
    }
    for (double w : planted_weights) {
      if (!std::isfinite(w)) throw InvalidDataError("planted weight is not finite");
    }
    if (!std::isfinite(planted_bias)) throw InvalidDataError("planted bias is not finite");
    if (!(label_noise_rate >= 0.0 && label_noise_rate < 0.5)) {
      throw InvalidDataError("label noise rate must lie in [0, 0.5)");
    }
  }
};

/// Planted weights drawn uniformly from [-1, 1]^dim with the given seed and
/// zero bias. The cohort itself is generated from the same seed.
inline SyntheticCohortSpec random_cohort_spec(std::size_t n, std::size_t dim, double noise, std::uint64_t seed) {
  SyntheticCohortSpec spec;
  spec.n = n;
  spec.dim = dim;
  spec.label_noise_rate = noise;
  spec.seed = seed;
  // Offset stream so weights and samples do not share draws.
  Xoshiro256 rng(seed ^ 0x5deece66dULL);
  spec.planted_weights.resize(dim);
  for (auto& w : spec.planted_weights) w = rng.uniform(-1.0, 1.0);
  return spec;
}

/// Samples x uniformly from [-1, 1]^dim, labels by the planted hyperplane and
/// flips each label independently with probability label_noise_rate.
///
/// Per sample the generator draws dim coordinates, redraws them while the
/// sample falls exactly on the hyperplane, then draws one flip decision.
inline Dataset generate_cohort(const SyntheticCohortSpec& spec) {
  spec.validate();
  Xoshiro256 rng(spec.seed);
  Dataset out;
  out.reserve(spec.n);
  std::vector<double> x(spec.dim);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double score = 0.0;
    do {
      score = spec.planted_bias;
      for (std::size_t j = 0; j < spec.dim; ++j) {
        x[j] = rng.uniform(-1.0, 1.0);
        score += spec.planted_weights[j] * x[j];
      }
    } while (score == 0.0);
    const bool flip = rng.bernoulli(spec.label_noise_rate);
    const bool positive = (score > 0.0) != flip;
    out.push_back(Example{FeatureVector::dense(x), positive ? Label::positive() : Label::negative()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resubstitution and hold-out

struct SplitEvaluation {
  ConfusionReport resubstitution;
  ConfusionReport holdout;
  TrainDiagnostics diagnostics;
};

/// Splits `data`, trains on the training part and reports errors on both
/// parts. The training-set row is the resubstitution error.
inline SplitEvaluation evaluate_with_holdout(std::span<const Example> data, const TrainConfig& config,
                                             double train_fraction) {
  auto [train_part, test_part] = split(data, train_fraction, config.seed);
  const auto result = train(train_part, config);
  return SplitEvaluation{evaluate(result.model, train_part, config.c_bound),
                         evaluate(result.model, test_part, config.c_bound), result.diagnostics};
}

}  // namespace margin_forge

#endif  // MARGIN_FORGE_EVAL_HPP
