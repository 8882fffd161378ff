#ifndef MARGIN_FORGE_FEATURE_VECTOR_HPP
#define MARGIN_FORGE_FEATURE_VECTOR_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "margin_forge/errors.hpp"

namespace margin_forge {

/// Class label of a sample, either +1 or -1.
class Label {
 public:
  static constexpr Label positive() noexcept { return Label(1); }
  static constexpr Label negative() noexcept { return Label(-1); }

  /// Accepts exactly +1 or -1.
  static Label from_int(int v) {
    if (v != 1 && v != -1) {
      throw InvalidDataError("label must be +1 or -1, got " + std::to_string(v));
    }
    return Label(v);
  }

  constexpr int value() const noexcept { return value_; }
  constexpr bool is_positive() const noexcept { return value_ > 0; }
  constexpr double as_double() const noexcept { return static_cast<double>(value_); }

  friend constexpr bool operator==(Label, Label) noexcept = default;

 private:
  constexpr explicit Label(int v) noexcept : value_(v) {}
  int value_;
};

/// One stored coordinate. Indices are 1-based.
struct Entry {
  std::uint32_t index;
  double value;

  friend bool operator==(const Entry&, const Entry&) = default;
};

/// A point in R^dim stored sparsely: zero coordinates may be omitted.
///
/// Indices are strictly increasing and lie in [1, dim]; values are finite.
/// Every constructor path validates these, so a FeatureVector that exists is
/// well formed.
class FeatureVector {
 public:
  FeatureVector() = default;

  /// Takes entries as given (explicit zeros are kept).
  FeatureVector(std::size_t dim, std::vector<Entry> entries)
      : dim_(dim), entries_(std::move(entries)) {
    validate();
  }

  /// Builds from dense coordinates, dropping zeros.
  static FeatureVector dense(std::span<const double> coords) {
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (coords[i] != 0.0) {
        entries.push_back({static_cast<std::uint32_t>(i + 1), coords[i]});
      }
    }
    return FeatureVector(coords.size(), std::move(entries));
  }

  static FeatureVector dense(std::initializer_list<double> coords) {
    return dense(std::span<const double>(coords.begin(), coords.size()));
  }

  std::size_t dim() const noexcept { return dim_; }
  std::span<const Entry> entries() const noexcept { return entries_; }
  std::size_t nnz() const noexcept { return entries_.size(); }

  /// Coordinate at 1-based `index`; zero when not stored.
  double at(std::size_t index) const {
    if (index == 0 || index > dim_) {
      throw DimensionError("index " + std::to_string(index) + " outside [1, " +
                           std::to_string(dim_) + "]");
    }
    for (const Entry& e : entries_) {
      if (e.index == index) return e.value;
      if (e.index > index) break;
    }
    return 0.0;
  }

  std::vector<double> to_dense() const {
    std::vector<double> out(dim_, 0.0);
    for (const Entry& e : entries_) out[e.index - 1] = e.value;
    return out;
  }

  /// Same point embedded in a space of dimension `dim` >= max stored index.
  FeatureVector with_dim(std::size_t dim) const { return FeatureVector(dim, entries_); }

  double squared_norm() const noexcept {
    double s = 0.0;
    for (const Entry& e : entries_) s += e.value * e.value;
    return s;
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  void validate() const {
    std::uint32_t prev = 0;
    for (const Entry& e : entries_) {
      if (e.index <= prev) {
        throw InvalidDataError("feature indices must be strictly increasing and 1-based");
      }
      if (e.index > dim_) {
        throw DimensionError("feature index " + std::to_string(e.index) +
                             " exceeds dimension " + std::to_string(dim_));
      }
      if (!std::isfinite(e.value)) {
        throw InvalidDataError("non-finite value at feature index " + std::to_string(e.index));
      }
      prev = e.index;
    }
  }

  std::size_t dim_ = 0;
  std::vector<Entry> entries_;
};

/// Sparse-sparse inner product. Caller checks dimensions.
inline double sparse_dot(const FeatureVector& a, const FeatureVector& b) noexcept {
  auto ia = a.entries().begin();
  auto ib = b.entries().begin();
  const auto ea = a.entries().end();
  const auto eb = b.entries().end();
  double s = 0.0;
  while (ia != ea && ib != eb) {
    if (ia->index == ib->index) {
      s += ia->value * ib->value;
      ++ia;
      ++ib;
    } else if (ia->index < ib->index) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return s;
}

/// A labeled sample.
struct Example {
  FeatureVector x;
  Label y;
};

using Dataset = std::vector<Example>;

}  // namespace margin_forge

#endif  // MARGIN_FORGE_FEATURE_VECTOR_HPP
