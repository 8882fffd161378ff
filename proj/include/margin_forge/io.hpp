#ifndef MARGIN_FORGE_IO_HPP
#define MARGIN_FORGE_IO_HPP

// File formats
// ------------
//
// Sparse examples (label-index format, one example per line):
//
//     <label> <index>:<value> <index>:<value> ...   # optional comment
//
//   label is one of "+1", "1", "-1". Indices are 1-based decimal integers,
//   strictly increasing within a line. Values are decimal reals. Blank lines
//   and lines that are only a comment are skipped. The writer emits labels
//   as "+1"/"-1", values with 17 significant digits ("%.17g"), one space
//   between tokens, and '\n' line ends. It may emit a leading comment line
//   "# dim <n>" which the reader takes as the dimension of every example;
//   other tools see an ordinary comment.
//
// Model file (line oriented, numbers in "%.17g"):
//
//     margin-forge-model v1
//     kernel linear | kernel rbf <gamma> | kernel polynomial <degree> <coef0> <gamma>
//     c_bound <C>
//     dim <n>
//     bias <b>
//     support_vectors <k>
//     <coefficient> <index>:<value> ...        (k lines)
//
// Schema file (one field per line, '#' starts a comment):
//
//     <name> numeric [standardize|raw] [mean|reject]
//     <name> binary <true-token> [reject]
//     <name> categorical <tok>,<tok>,... [onehot|scalar] [zero|extra|reject]
//     @label <field>,<field>,... [<true-token>]
//
//   Omitted policies take the defaults: mean for numeric, zero for one-hot,
//   reject for scalar and binary. The @label true token defaults to "yes".
//
// Encoder state:
//
//     margin-forge-encoder v1
//     <field> <mean> <stddev>                   (one line per numeric field)

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "margin_forge/encoding.hpp"
#include "margin_forge/errors.hpp"
#include "margin_forge/feature_vector.hpp"
#include "margin_forge/kernel.hpp"
#include "margin_forge/model.hpp"

namespace margin_forge {

inline constexpr std::string_view kModelMagic = "margin-forge-model";
inline constexpr int kModelVersion = 1;
inline constexpr std::string_view kEncoderMagic = "margin-forge-encoder";

/// 17 significant digits, enough to round-trip `v` exactly. Negative zero
/// is written as "0".
inline std::string format_real(double v) {
  if (v == 0.0) v = 0.0;
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline std::vector<std::string> split_char(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

/// Parses "<index>:<value>" tokens, enforcing strictly increasing indices.
inline std::vector<Entry> parse_entries(std::span<const std::string_view> tokens, std::size_t line_no) {
  std::vector<Entry> entries;
  entries.reserve(tokens.size());
  std::uint32_t prev = 0;
  for (const auto tok : tokens) {
    const auto colon = tok.find(':');
    if (colon == std::string_view::npos) throw ParseError(line_no, "expected <index>:<value>, got '" + std::string(tok) + "'");
    const auto index = parse_int<std::uint32_t>(tok.substr(0, colon));
    if (!index || *index == 0) throw ParseError(line_no, "bad feature index in '" + std::string(tok) + "'");
    const auto value = parse_double(tok.substr(colon + 1));
    if (!value) throw ParseError(line_no, "bad feature value in '" + std::string(tok) + "'");
    if (*index <= prev) throw ParseError(line_no, "feature indices must be strictly increasing");
    prev = *index;
    entries.push_back({*index, *value});
  }
  return entries;
}

inline void write_entries(std::ostream& out, std::span<const Entry> entries) {
  for (const Entry& e : entries) out << ' ' << e.index << ':' << format_real(e.value);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV

namespace detail {

/// Splits one CSV line. Double quotes delimit cells and "" escapes a quote.
/// Unquoted cells are trimmed.
inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      if (!trim(cell).empty()) throw ParseError(line_no, "quote inside an unquoted cell");
      cell.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      cells.push_back(was_quoted ? cell : std::string(trim(cell)));
      cell.clear();
      was_quoted = false;
    } else if (was_quoted) {
      if (c != ' ' && c != '\t') throw ParseError(line_no, "text after a closing quote");
    } else {
      cell.push_back(c);
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quoted cell");
  cells.push_back(was_quoted ? cell : std::string(trim(cell)));
  return cells;
}

}  // namespace detail

/// Reads a comma-separated cohort whose header names at least every schema
/// field and every label-rule field. Records keep every column; empty cells
/// are missing (nullopt).
inline std::vector<Record> read_csv(std::istream& in, const Schema& schema) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (!detail::trim(line).empty()) {
      header = detail::split_csv_line(line, line_no);
      break;
    }
  }
  if (header.empty()) throw ParseError(line_no, "CSV input is empty (no header line)");

  auto require = [&](const std::string& name) {
    for (const auto& h : header) {
      if (h == name) return;
    }
    throw SchemaError("CSV header lacks column '" + name + "'");
  };
  for (const auto& f : schema.fields()) require(f.name);
  if (const auto& rule = schema.label_rule()) {
    for (const auto& name : rule->fields) require(name);
  }

  std::vector<Record> records;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line, line_no);
    if (cells.size() != header.size()) {
      throw ParseError(line_no, "row has " + std::to_string(cells.size()) + " cells, header has " +
                                    std::to_string(header.size()));
    }
    Record r;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].empty()) {
        r[header[i]] = std::nullopt;
      } else {
        r[header[i]] = std::move(cells[i]);
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

inline std::vector<Record> read_csv(const std::string& path, const Schema& schema) {
  auto in = detail::open_in(path);
  return read_csv(in, schema);
}

// ---------------------------------------------------------------------------
// Sparse label-index format

struct SparseExample {
  Label label;
  std::vector<Entry> entries;

  friend bool operator==(const SparseExample&, const SparseExample&) = default;
};

struct SparseData {
  std::vector<SparseExample> examples;
  /// From a "# dim <n>" line, when present.
  std::optional<std::size_t> declared_dim;

  /// Declared dimension, else the largest index used.
  std::size_t dim() const {
    if (declared_dim) return *declared_dim;
    std::size_t d = 0;
    for (const auto& ex : examples) {
      if (!ex.entries.empty()) d = std::max<std::size_t>(d, ex.entries.back().index);
    }
    return d;
  }

  /// Examples as feature vectors of dimension `dim`.
  Dataset to_dataset(std::size_t dim) const {
    Dataset out;
    out.reserve(examples.size());
    for (const auto& ex : examples) out.push_back(Example{FeatureVector(dim, ex.entries), ex.label});
    return out;
  }
  Dataset to_dataset() const { return to_dataset(dim()); }
};

inline SparseExample to_sparse(const Example& ex) {
  const auto e = ex.x.entries();
  return SparseExample{ex.y, std::vector<Entry>(e.begin(), e.end())};
}

inline SparseData read_sparse(std::istream& in) {
  SparseData data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    const std::string_view full = line;
    const std::string_view body = detail::strip_comment(full);
    const auto tokens = detail::split_ws(body);
    if (tokens.empty()) {
      if (data.examples.empty() && !data.declared_dim && body.size() < full.size()) {
        const auto words = detail::split_ws(full.substr(body.size() + 1));
        if (words.size() == 2 && words[0] == "dim") {
          const auto d = detail::parse_int<std::size_t>(words[1]);
          if (!d) throw ParseError(line_no, "bad dimension in dim comment");
          data.declared_dim = *d;
        }
      }
      continue;
    }
    int label_value = 0;
    if (tokens[0] == "+1" || tokens[0] == "1") {
      label_value = 1;
    } else if (tokens[0] == "-1") {
      label_value = -1;
    } else {
      throw ParseError(line_no, "label must be +1, 1 or -1, got '" + std::string(tokens[0]) + "'");
    }
    auto entries = detail::parse_entries(std::span(tokens).subspan(1), line_no);
    if (data.declared_dim && !entries.empty() && entries.back().index > *data.declared_dim) {
      throw ParseError(line_no, "feature index " + std::to_string(entries.back().index) +
                                    " exceeds declared dimension " + std::to_string(*data.declared_dim));
    }
    data.examples.push_back(SparseExample{Label::from_int(label_value), std::move(entries)});
  }
  return data;
}

inline SparseData read_sparse(const std::string& path) {
  auto in = detail::open_in(path);
  return read_sparse(in);
}

inline void write_sparse(std::ostream& out, std::span<const SparseExample> examples,
                         std::optional<std::size_t> dim = std::nullopt) {
  if (dim) out << "# dim " << *dim << '\n';
  for (const auto& ex : examples) {
    out << (ex.label.is_positive() ? "+1" : "-1");
    detail::write_entries(out, ex.entries);
    out << '\n';
  }
}

inline void write_sparse(const std::string& path, std::span<const SparseExample> examples,
                         std::optional<std::size_t> dim = std::nullopt) {
  auto out = detail::open_out(path);
  write_sparse(out, examples, dim);
  if (!out) throw Error("failed writing '" + path + "'");
}

/// Writes a dataset with its dimension declared.
inline void write_dataset(const std::string& path, std::span<const Example> data) {
  std::vector<SparseExample> rows;
  rows.reserve(data.size());
  for (const auto& ex : data) rows.push_back(to_sparse(ex));
  write_sparse(path, rows, data.empty() ? std::optional<std::size_t>{} : data.front().x.dim());
}

// ---------------------------------------------------------------------------
// Model files

inline void save_model(std::ostream& out, const Model& m) {
  out << kModelMagic << " v" << kModelVersion << '\n';
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, LinearKernel>) {
          out << "kernel linear\n";
        } else if constexpr (std::is_same_v<K, RbfKernel>) {
          out << "kernel rbf " << format_real(k.gamma) << '\n';
        } else {
          out << "kernel polynomial " << k.degree << ' ' << format_real(k.coef0) << ' '
              << format_real(k.gamma) << '\n';
        }
      },
      m.kernel().kind());
  out << "c_bound " << format_real(m.c_bound()) << '\n';
  out << "dim " << m.dim() << '\n';
  out << "bias " << format_real(m.bias()) << '\n';
  out << "support_vectors " << m.support_vectors().size() << '\n';
  for (std::size_t i = 0; i < m.support_vectors().size(); ++i) {
    out << format_real(m.sv_coefficients()[i]);
    detail::write_entries(out, m.support_vectors()[i].entries());
    out << '\n';
  }
}

inline void save_model(const std::string& path, const Model& m) {
  auto out = detail::open_out(path);
  save_model(out, m);
  if (!out) throw Error("failed writing '" + path + "'");
}

inline Model load_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&](std::string_view what) -> std::vector<std::string_view> {
    if (!std::getline(in, line)) throw ParseError(line_no + 1, "model file truncated: expected " + std::string(what));
    ++line_no;
    detail::strip_cr(line);
    return detail::split_ws(line);
  };
  auto keyed = [&](std::string_view key, std::size_t n_values) {
    auto t = next(key);
    if (t.size() != n_values + 1 || t[0] != key) {
      throw ParseError(line_no, "expected '" + std::string(key) + "' with " + std::to_string(n_values) + " value(s)");
    }
    return t;
  };
  auto real = [&](std::string_view s) {
    const auto v = detail::parse_double(s);
    if (!v) throw ParseError(line_no, "bad number '" + std::string(s) + "'");
    return *v;
  };

  {
    const auto t = next("header");
    const std::string prefix = std::string(kModelMagic);
    if (t.size() != 2 || t[0] != prefix || t[1].size() < 2 || t[1][0] != 'v') {
      throw ParseError(line_no, "not a margin-forge model file");
    }
    const auto version = detail::parse_int<int>(t[1].substr(1));
    if (!version) throw ParseError(line_no, "bad model version '" + std::string(t[1]) + "'");
    if (*version != kModelVersion) {
      throw VersionError("unsupported model version " + std::to_string(*version) + " (supported: " +
                         std::to_string(kModelVersion) + ")");
    }
  }

  Kernel kernel;
  {
    const auto t = next("kernel");
    if (t.size() < 2 || t[0] != "kernel") throw ParseError(line_no, "expected kernel line");
    try {
      if (t[1] == "linear" && t.size() == 2) {
        kernel = Kernel::linear();
      } else if (t[1] == "rbf" && t.size() == 3) {
        kernel = Kernel::rbf(real(t[2]));
      } else if (t[1] == "polynomial" && t.size() == 5) {
        const auto degree = detail::parse_int<int>(t[2]);
        if (!degree) throw ParseError(line_no, "bad polynomial degree");
        kernel = Kernel::polynomial(*degree, real(t[3]), real(t[4]));
      } else {
        throw ParseError(line_no, "unknown kernel descriptor");
      }
    } catch (const InvalidDataError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  const double c_bound = real(keyed("c_bound", 1)[1]);
  const auto dim = detail::parse_int<std::size_t>(keyed("dim", 1)[1]);
  if (!dim) throw ParseError(line_no, "bad dimension");
  const double bias = real(keyed("bias", 1)[1]);
  const auto count = detail::parse_int<std::size_t>(keyed("support_vectors", 1)[1]);
  if (!count || *count == 0) throw ParseError(line_no, "bad support vector count");

  std::vector<FeatureVector> svs;
  std::vector<double> coefs;
  svs.reserve(*count);
  coefs.reserve(*count);
  for (std::size_t i = 0; i < *count; ++i) {
    const auto t = next("support vector row");
    if (t.empty()) throw ParseError(line_no, "empty support vector row");
    coefs.push_back(real(t[0]));
    auto entries = detail::parse_entries(std::span(t).subspan(1), line_no);
    if (!entries.empty() && entries.back().index > *dim) {
      throw ParseError(line_no, "support vector index exceeds model dimension");
    }
    svs.emplace_back(*dim, std::move(entries));
  }
  return Model(kernel, bias, std::move(svs), std::move(coefs), *dim, c_bound);
}

inline Model load_model(const std::string& path) {
  auto in = detail::open_in(path);
  return load_model(in);
}

// ---------------------------------------------------------------------------
// Schema files

inline Schema parse_schema(std::istream& in) {
  std::vector<FieldSpec> fields;
  std::optional<LabelRule> rule;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    const auto t = detail::split_ws(detail::strip_comment(line));
    if (t.empty()) continue;
    auto fail = [&](const std::string& what) { return ParseError(line_no, what); };

    if (t[0] == "@label") {
      if (rule) throw fail("duplicate @label line");
      if (t.size() < 2 || t.size() > 3) throw fail("expected '@label <field>,... [<true-token>]'");
      LabelRule r;
      r.fields = detail::split_char(t[1], ',');
      for (const auto& f : r.fields) {
        if (f.empty()) throw fail("empty field name in @label");
      }
      if (t.size() == 3) r.true_token = std::string(t[2]);
      rule = std::move(r);
      continue;
    }
    if (t[0].front() == '@') throw fail("unknown directive '" + std::string(t[0]) + "'");
    if (t.size() < 2) throw fail("expected '<name> <kind> ...'");

    const std::string name(t[0]);
    const std::string_view kind = t[1];
    auto policy_of = [&](std::string_view word) -> std::optional<MissingPolicy> {
      if (word == "reject") return MissingPolicy::Reject;
      if (word == "mean") return MissingPolicy::MeanImpute;
      if (word == "zero") return MissingPolicy::AllZero;
      if (word == "extra") return MissingPolicy::ExtraCategory;
      return std::nullopt;
    };

    FieldSpec spec;
    if (kind == "numeric") {
      bool standardize = true;
      std::optional<MissingPolicy> policy;
      for (std::size_t i = 2; i < t.size(); ++i) {
        if (t[i] == "standardize") {
          standardize = true;
        } else if (t[i] == "raw") {
          standardize = false;
        } else if (auto p = policy_of(t[i]); p && !policy) {
          policy = p;
        } else {
          throw fail("unexpected token '" + std::string(t[i]) + "' for numeric field");
        }
      }
      spec = FieldSpec::numeric(name, standardize, policy.value_or(MissingPolicy::MeanImpute));
    } else if (kind == "binary") {
      if (t.size() < 3 || t.size() > 4) throw fail("expected '<name> binary <true-token> [reject]'");
      std::optional<MissingPolicy> policy;
      if (t.size() == 4) {
        policy = policy_of(t[3]);
        if (!policy) throw fail("unknown policy '" + std::string(t[3]) + "'");
      }
      spec = FieldSpec::binary(name, std::string(t[2]), policy.value_or(MissingPolicy::Reject));
    } else if (kind == "categorical") {
      if (t.size() < 3 || t.size() > 5) {
        throw fail("expected '<name> categorical <tokens> [onehot|scalar] [policy]'");
      }
      auto alphabet = detail::split_char(t[2], ',');
      CategoricalMode mode = CategoricalMode::OneHot;
      std::optional<MissingPolicy> policy;
      for (std::size_t i = 3; i < t.size(); ++i) {
        if (t[i] == "onehot") {
          mode = CategoricalMode::OneHot;
        } else if (t[i] == "scalar") {
          mode = CategoricalMode::Scalar;
        } else if (auto p = policy_of(t[i]); p && !policy) {
          policy = p;
        } else {
          throw fail("unexpected token '" + std::string(t[i]) + "' for categorical field");
        }
      }
      spec = policy ? FieldSpec::categorical(name, std::move(alphabet), mode, *policy)
                    : FieldSpec::categorical(name, std::move(alphabet), mode);
    } else {
      throw fail("unknown field kind '" + std::string(kind) + "'");
    }
    try {
      spec.validate();
    } catch (const SchemaError& e) {
      throw fail(e.what());
    }
    fields.push_back(std::move(spec));
  }
  if (fields.empty()) throw ParseError(line_no, "schema declares no fields");
  try {
    return Schema(std::move(fields), std::move(rule));
  } catch (const SchemaError& e) {
    throw ParseError(line_no, e.what());
  }
}

inline Schema load_schema(const std::string& path) {
  auto in = detail::open_in(path);
  return parse_schema(in);
}

// ---------------------------------------------------------------------------
// Encoder state

inline void save_encoder_state(std::ostream& out, const EncoderState& state) {
  out << kEncoderMagic << " v1\n";
  for (const auto& [name, stats] : state.numeric) {
    out << name << ' ' << format_real(stats.mean) << ' ' << format_real(stats.stddev) << '\n';
  }
}

inline void save_encoder_state(const std::string& path, const EncoderState& state) {
  auto out = detail::open_out(path);
  save_encoder_state(out, state);
  if (!out) throw Error("failed writing '" + path + "'");
}

inline EncoderState load_encoder_state(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "encoder state file is empty");
  ++line_no;
  detail::strip_cr(line);
  const auto head = detail::split_ws(line);
  if (head.size() != 2 || head[0] != kEncoderMagic) throw ParseError(1, "not a margin-forge encoder state file");
  if (head[1] != "v1") throw VersionError("unsupported encoder state version '" + std::string(head[1]) + "'");
  EncoderState state;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    const auto t = detail::split_ws(line);
    if (t.empty()) continue;
    if (t.size() != 3) throw ParseError(line_no, "expected '<field> <mean> <stddev>'");
    const auto mean = detail::parse_double(t[1]);
    const auto sd = detail::parse_double(t[2]);
    if (!mean || !sd || *sd < 0.0) throw ParseError(line_no, "bad statistics");
    state.numeric[std::string(t[0])] = NumericStats{*mean, *sd};
  }
  return state;
}

inline EncoderState load_encoder_state(const std::string& path) {
  auto in = detail::open_in(path);
  return load_encoder_state(in);
}

}  // namespace margin_forge

#endif  // MARGIN_FORGE_IO_HPP
