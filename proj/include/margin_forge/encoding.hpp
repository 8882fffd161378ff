#ifndef MARGIN_FORGE_ENCODING_HPP
#define MARGIN_FORGE_ENCODING_HPP

#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "margin_forge/errors.hpp"
#include "margin_forge/feature_vector.hpp"

namespace margin_forge {

enum class CategoricalMode { OneHot, Scalar };

enum class MissingPolicy {
  Reject,
  /// Numeric only: substitute the fitted mean.
  MeanImpute,
  /// Categorical one-hot only: emit an all-zero block.
  AllZero,
  /// Categorical only: missing and unknown tokens map to an extra category
  /// appended after the alphabet.
  ExtraCategory,
};

struct CategoricalField {
  std::vector<std::string> alphabet;
  CategoricalMode mode = CategoricalMode::OneHot;
};

struct NumericField {
  bool standardize = true;
};

struct BinaryField {
  std::string true_token;
};

/// How one raw column becomes coordinates.
struct FieldSpec {
  using Kind = std::variant<CategoricalField, NumericField, BinaryField>;

  std::string name;
  Kind kind;
  MissingPolicy missing_policy = MissingPolicy::Reject;

  static FieldSpec categorical(std::string name, std::vector<std::string> alphabet,
                               CategoricalMode mode = CategoricalMode::OneHot) {
    const MissingPolicy policy =
        mode == CategoricalMode::OneHot ? MissingPolicy::AllZero : MissingPolicy::Reject;
    return categorical(std::move(name), std::move(alphabet), mode, policy);
  }
  static FieldSpec categorical(std::string name, std::vector<std::string> alphabet,
                               CategoricalMode mode, MissingPolicy policy) {
    return FieldSpec{std::move(name), CategoricalField{std::move(alphabet), mode}, policy};
  }
  static FieldSpec numeric(std::string name, bool standardize = true,
                           MissingPolicy policy = MissingPolicy::MeanImpute) {
    return FieldSpec{std::move(name), NumericField{standardize}, policy};
  }
  static FieldSpec binary(std::string name, std::string true_token,
                          MissingPolicy policy = MissingPolicy::Reject) {
    return FieldSpec{std::move(name), BinaryField{std::move(true_token)}, policy};
  }

  bool has_extra_category() const noexcept { return missing_policy == MissingPolicy::ExtraCategory; }

  /// Number of coordinates this field occupies.
  std::size_t width() const {
    if (const auto* c = std::get_if<CategoricalField>(&kind)) {
      if (c->mode == CategoricalMode::Scalar) return 1;
      return c->alphabet.size() + (has_extra_category() ? 1 : 0);
    }
    return 1;
  }

  void validate() const {
    if (name.empty()) throw SchemaError("field name must not be empty");
    if (const auto* c = std::get_if<CategoricalField>(&kind)) {
      if (c->alphabet.empty()) throw SchemaError("field '" + name + "': alphabet is empty");
      std::set<std::string> seen;
      for (const auto& token : c->alphabet) {
        if (token.empty()) throw SchemaError("field '" + name + "': empty alphabet entry");
        if (!seen.insert(token).second) {
          throw SchemaError("field '" + name + "': duplicate alphabet entry '" + token + "'");
        }
      }
      if (missing_policy == MissingPolicy::MeanImpute) {
        throw SchemaError("field '" + name + "': mean imputation applies to numeric fields only");
      }
      if (missing_policy == MissingPolicy::AllZero && c->mode != CategoricalMode::OneHot) {
        throw SchemaError("field '" + name + "': all-zero policy needs one-hot mode");
      }
    } else if (std::holds_alternative<NumericField>(kind)) {
      if (missing_policy != MissingPolicy::Reject && missing_policy != MissingPolicy::MeanImpute) {
        throw SchemaError("field '" + name + "': numeric fields accept reject or mean policies");
      }
    } else {
      if (std::get<BinaryField>(kind).true_token.empty()) {
        throw SchemaError("field '" + name + "': binary field needs a true token");
      }
      if (missing_policy != MissingPolicy::Reject) {
        throw SchemaError("field '" + name + "': binary fields accept the reject policy only");
      }
    }
  }
};

/// +1 when any of `fields` holds `true_token`, otherwise -1.
struct LabelRule {
  std::vector<std::string> fields;
  std::string true_token = "yes";
};

/// Ordered field list. Field i occupies coordinates
/// [offset(i) + 1, offset(i) + width(i)] of every encoded vector.
class Schema {
 public:
  Schema() = default;

  explicit Schema(std::vector<FieldSpec> fields, std::optional<LabelRule> label_rule = std::nullopt)
      : fields_(std::move(fields)), label_rule_(std::move(label_rule)) {
    std::set<std::string> names;
    offsets_.reserve(fields_.size());
    for (const auto& f : fields_) {
      f.validate();
      if (!names.insert(f.name).second) throw SchemaError("duplicate field name '" + f.name + "'");
      offsets_.push_back(total_dim_);
      total_dim_ += f.width();
    }
    if (label_rule_ && label_rule_->fields.empty()) {
      throw SchemaError("label rule names no fields");
    }
  }

  std::span<const FieldSpec> fields() const noexcept { return fields_; }
  const std::optional<LabelRule>& label_rule() const noexcept { return label_rule_; }
  std::size_t total_dim() const noexcept { return total_dim_; }
  /// 0-based offset of field `i`'s first coordinate.
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }

  const FieldSpec* find(std::string_view name) const {
    for (const auto& f : fields_) {
      if (f.name == name) return &f;
    }
    return nullptr;
  }

 private:
  std::vector<FieldSpec> fields_;
  std::optional<LabelRule> label_rule_;
  std::vector<std::size_t> offsets_;
  std::size_t total_dim_ = 0;
};

/// Raw tokens by column name. A missing cell is either absent or nullopt.
using Record = std::map<std::string, std::optional<std::string>, std::less<>>;

struct NumericStats {
  double mean = 0.0;
  /// Population standard deviation; 0 marks a constant column.
  double stddev = 0.0;

  friend bool operator==(const NumericStats&, const NumericStats&) = default;
};

/// Per-numeric-field statistics fitted on a training split.
struct EncoderState {
  std::map<std::string, NumericStats, std::less<>> numeric;

  friend bool operator==(const EncoderState&, const EncoderState&) = default;
};

/// Code of the i-th (1-based) of m alphabet entries: i / (m + 1).
/// For A,C,G,T this gives 0.2, 0.4, 0.6, 0.8.
inline double scalar_code(std::size_t alphabet_size, std::size_t index) {
  if (index < 1 || index > alphabet_size) {
    throw SchemaError("scalar code index " + std::to_string(index) + " outside [1, " +
                      std::to_string(alphabet_size) + "]");
  }
  return static_cast<double>(index) / static_cast<double>(alphabet_size + 1);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Whole-token finite double, locale independent.
inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Present, non-blank token of `name`, or nullopt when missing.
inline std::optional<std::string_view> token_of(const Record& r, std::string_view name) {
  const auto it = r.find(name);
  if (it == r.end() || !it->second) return std::nullopt;
  const std::string_view t = trim(*it->second);
  if (t.empty()) return std::nullopt;
  return t;
}

}  // namespace detail

/// Fits mean and population standard deviation of every numeric field over
/// the parseable values of `data`.
inline EncoderState fit_encoder(const Schema& schema, std::span<const Record> data) {
  if (data.empty()) throw EncodingError("cannot fit an encoder on zero records");
  EncoderState state;
  for (const auto& field : schema.fields()) {
    if (!std::holds_alternative<NumericField>(field.kind)) continue;
    std::vector<double> values;
    values.reserve(data.size());
    for (const auto& r : data) {
      if (const auto t = detail::token_of(r, field.name)) {
        if (const auto v = detail::parse_double(*t)) values.push_back(*v);
      }
    }
    if (values.empty()) throw EncodingError("numeric field '" + field.name + "' has no values to fit");
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double stddev = std::sqrt(ss / static_cast<double>(values.size()));
    state.numeric[field.name] = NumericStats{mean, stddev};
  }
  return state;
}

/// Encodes one record into a vector of dimension schema.total_dim().
///
/// One-hot blocks hold a single 1 (none under the all-zero policy), scalar
/// fields hold scalar_code, numeric fields hold the raw value or its z-score
/// (0 for constant columns), binary fields hold 1 iff the token equals the
/// true token.
inline FeatureVector encode_record(const Schema& schema, const EncoderState& state, const Record& r) {
  std::vector<Entry> entries;
  const auto fields = schema.fields();
  auto emit = [&](std::size_t coordinate, double value) {
    if (value != 0.0) entries.push_back({static_cast<std::uint32_t>(coordinate + 1), value});
  };

  for (std::size_t fi = 0; fi < fields.size(); ++fi) {
    const FieldSpec& field = fields[fi];
    const std::size_t offset = schema.offset(fi);
    const auto token = detail::token_of(r, field.name);
    const auto missing = [&]() {
      return MissingValueError("field '" + field.name + "' is missing and its policy rejects it");
    };

    if (const auto* cat = std::get_if<CategoricalField>(&field.kind)) {
      const std::size_t m = cat->alphabet.size();
      std::optional<std::size_t> slot;  // 0-based position, m for the extra category
      if (token) {
        for (std::size_t k = 0; k < m; ++k) {
          if (cat->alphabet[k] == *token) {
            slot = k;
            break;
          }
        }
        if (!slot) {
          if (!field.has_extra_category()) {
            throw EncodingError("field '" + field.name + "': unknown token '" + std::string(*token) + "'");
          }
          slot = m;
        }
      } else if (field.has_extra_category()) {
        slot = m;
      } else if (field.missing_policy == MissingPolicy::Reject) {
        throw missing();
      }
      if (!slot) continue;  // all-zero block
      if (cat->mode == CategoricalMode::OneHot) {
        emit(offset + *slot, 1.0);
      } else {
        const std::size_t effective = m + (field.has_extra_category() ? 1 : 0);
        emit(offset, scalar_code(effective, *slot + 1));
      }
    } else if (const auto* num = std::get_if<NumericField>(&field.kind)) {
      const auto stats = state.numeric.find(field.name);
      std::optional<double> value;
      if (token) {
        value = detail::parse_double(*token);
        if (!value) {
          throw EncodingError("field '" + field.name + "': '" + std::string(*token) + "' is not a number");
        }
      } else if (field.missing_policy == MissingPolicy::MeanImpute) {
        if (stats == state.numeric.end()) {
          throw EncodingError("field '" + field.name + "': encoder state not fitted for imputation");
        }
        value = stats->second.mean;
      } else {
        throw missing();
      }
      double x = *value;
      if (num->standardize) {
        if (stats == state.numeric.end()) {
          throw EncodingError("field '" + field.name + "': encoder state not fitted for standardization");
        }
        x = stats->second.stddev > 0.0 ? (x - stats->second.mean) / stats->second.stddev : 0.0;
      }
      emit(offset, x);
    } else {
      const auto& bin = std::get<BinaryField>(field.kind);
      if (!token) throw missing();
      emit(offset, *token == bin.true_token ? 1.0 : 0.0);
    }
  }
  return FeatureVector(schema.total_dim(), std::move(entries));
}

/// Applies `rule` to a record. Every named field must be a column of the
/// record; a blank cell counts as not true.
inline Label label_record(const Record& r, const LabelRule& rule) {
  if (rule.fields.empty()) throw SchemaError("label rule names no fields");
  bool positive = false;
  for (const auto& name : rule.fields) {
    if (r.find(name) == r.end()) throw SchemaError("label field '" + name + "' is absent from the record");
    const auto t = detail::token_of(r, name);
    if (t && *t == rule.true_token) positive = true;
  }
  return positive ? Label::positive() : Label::negative();
}

}  // namespace margin_forge

#endif  // MARGIN_FORGE_ENCODING_HPP
