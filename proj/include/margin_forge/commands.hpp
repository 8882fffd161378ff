#ifndef MARGIN_FORGE_COMMANDS_HPP
#define MARGIN_FORGE_COMMANDS_HPP

// Subcommand bodies of the margin-forge tool. Each returns a process exit
// code and reports failures as a single "error: ..." line on `err`.

#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "margin_forge/encoding.hpp"
#include "margin_forge/errors.hpp"
#include "margin_forge/eval.hpp"
#include "margin_forge/io.hpp"
#include "margin_forge/model.hpp"
#include "margin_forge/smo.hpp"

namespace margin_forge::cli {

enum class Verbosity { Quiet, Info, Debug };

inline Verbosity parse_verbosity(const char* value) {
  if (value == nullptr) return Verbosity::Quiet;
  const std::string v(value);
  if (v == "info" || v == "1") return Verbosity::Info;
  if (v == "debug" || v == "2") return Verbosity::Debug;
  return Verbosity::Quiet;
}

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

struct EncodeOptions {
  std::string csv_path;
  std::string schema_path;
  std::string out_path;
  /// Overrides the schema's @label line when non-empty.
  std::vector<std::string> label_fields;
  std::optional<std::string> true_token;
  /// Reuse statistics fitted elsewhere instead of fitting on this file.
  std::optional<std::string> state_in;
  std::optional<std::string> state_out;
};

struct TrainOptions {
  std::string input_path;
  std::string model_path;
  double c_bound = 1.0;
  std::string kernel = "linear";
  double gamma = 1.0;
  int degree = 3;
  double coef0 = 0.0;
  double tolerance = 1e-3;
  std::uint64_t max_iterations = 10'000'000;
  std::uint64_t seed = 0;
};

struct PredictOptions {
  std::string model_path;
  std::string input_path;
  std::optional<std::string> out_path;
};

struct EvaluateOptions {
  std::string model_path;
  std::string input_path;
  /// C shown in the report; defaults to the C stored in the model.
  std::optional<double> c_bound;
  bool csv = false;
  std::optional<std::string> out_path;
  std::string title;
};

struct SynthOptions {
  std::size_t n = 1000;
  std::size_t dim = 20;
  double noise = 0.0;
  double bias = 0.0;
  std::uint64_t seed = 0;
  std::string out_path;
};

inline Kernel make_kernel(const TrainOptions& o) {
  if (o.kernel == "linear") return Kernel::linear();
  if (o.kernel == "rbf") return Kernel::rbf(o.gamma);
  if (o.kernel == "poly" || o.kernel == "polynomial") return Kernel::polynomial(o.degree, o.coef0, o.gamma);
  throw InvalidDataError("unknown kernel '" + o.kernel + "' (expected linear, rbf or poly)");
}

inline void print_diagnostics(std::ostream& out, const TrainDiagnostics& d) {
  out << "dual_objective " << format_real(d.dual_objective) << '\n'
      << "iterations " << d.iterations << '\n'
      << "support_vectors " << d.n_support_vectors << '\n'
      << "bounded_support_vectors " << d.n_bounded_svs << '\n'
      << "max_kkt_violation " << format_real(d.max_kkt_violation) << '\n'
      << "total_slack " << format_real(d.total_slack) << '\n';
}

namespace detail {

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

/// Loads a sparse file as vectors of dimension `model_dim`, rejecting data
/// that does not live in the model's space.
inline Dataset load_for_model(const std::string& path, std::size_t model_dim) {
  const SparseData data = read_sparse(path);
  if (data.declared_dim && *data.declared_dim != model_dim) {
    throw DimensionError("data dimension " + std::to_string(*data.declared_dim) + " differs from model dimension " +
                         std::to_string(model_dim));
  }
  if (data.dim() > model_dim) {
    throw DimensionError("data uses feature index " + std::to_string(data.dim()) + " beyond model dimension " +
                         std::to_string(model_dim));
  }
  return data.to_dataset(model_dim);
}

}  // namespace detail

/// CSV + schema -> sparse file. Prints "<n_total> <n_pos> <n_neg>".
inline int cmd_encode(const EncodeOptions& o, std::ostream& out, std::ostream& err,
                      Verbosity verbosity = Verbosity::Quiet) {
  return detail::guarded(err, [&] {
    const Schema schema = load_schema(o.schema_path);
    LabelRule rule;
    if (!o.label_fields.empty()) {
      rule.fields = o.label_fields;
    } else if (schema.label_rule()) {
      rule = *schema.label_rule();
    } else {
      throw SchemaError("no label rule: add an @label line to the schema or pass --label-fields");
    }
    if (o.true_token) rule.true_token = *o.true_token;

    const std::vector<Record> records = read_csv(o.csv_path, schema);
    if (records.empty()) throw ParseError(0, "CSV '" + o.csv_path + "' has no data rows");
    const EncoderState state = o.state_in ? load_encoder_state(*o.state_in) : fit_encoder(schema, records);
    if (o.state_out) save_encoder_state(*o.state_out, state);

    std::vector<SparseExample> rows;
    rows.reserve(records.size());
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      try {
        const Label y = label_record(records[i], rule);
        const FeatureVector x = encode_record(schema, state, records[i]);
        if (y.is_positive()) ++n_pos;
        rows.push_back(SparseExample{y, {x.entries().begin(), x.entries().end()}});
      } catch (const Error& e) {
        throw Error("record " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    write_sparse(o.out_path, rows, schema.total_dim());
    if (verbosity != Verbosity::Quiet) {
      err << "encoded " << rows.size() << " records into dimension " << schema.total_dim() << '\n';
    }
    out << records.size() << ' ' << n_pos << ' ' << records.size() - n_pos << '\n';
    return kExitOk;
  });
}

/// Trains on a sparse file and writes the model. Diagnostics go to `out`,
/// including when the solver fails to converge.
inline int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err,
                     Verbosity verbosity = Verbosity::Quiet) {
  return detail::guarded(err, [&] {
    TrainConfig config;
    config.c_bound = o.c_bound;
    config.kernel = make_kernel(o);
    config.kkt_tolerance = o.tolerance;
    config.max_passes = o.max_iterations;
    config.seed = o.seed;
    config.validate();

    const SparseData sparse = read_sparse(o.input_path);
    const Dataset data = sparse.to_dataset();
    if (verbosity != Verbosity::Quiet) {
      err << "training on " << data.size() << " samples of dimension " << sparse.dim() << " with "
          << config.kernel.describe() << ", C=" << format_real(config.c_bound) << '\n';
    }
    IterationObserver observer;
    if (verbosity == Verbosity::Debug) {
      observer = [&err](std::uint64_t it, double dual) {
        if (it % 1000 == 0) err << "iteration " << it << " dual " << format_real(dual) << '\n';
      };
    }
    try {
      const TrainResult result = train(data, config, observer);
      save_model(o.model_path, result.model);
      print_diagnostics(out, result.diagnostics);
      out << "bias " << format_real(result.model.bias()) << '\n';
      return kExitOk;
    } catch (const ConvergenceError& e) {
      print_diagnostics(out, e.diagnostics());
      err << "error: " << e.what() << '\n';
      return kExitNotConverged;
    }
  });
}

/// Prints "<label> <decision value>" per example.
inline int cmd_predict(const PredictOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Model model = load_model(o.model_path);
    const Dataset data = detail::load_for_model(o.input_path, model.dim());
    std::ofstream file;
    if (o.out_path) {
      file.open(*o.out_path, std::ios::binary | std::ios::trunc);
      if (!file) throw Error("cannot open '" + *o.out_path + "' for writing");
    }
    std::ostream& sink = o.out_path ? file : out;
    for (const auto& ex : data) {
      const double f = decision_value(model, ex.x);
      sink << (f >= 0.0 ? "+1" : "-1") << ' ' << format_real(f) << '\n';
    }
    return kExitOk;
  });
}

/// Prints one report row (table or CSV) and optionally writes it to a file.
inline int cmd_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Model model = load_model(o.model_path);
    const Dataset data = detail::load_for_model(o.input_path, model.dim());
    if (data.empty()) throw InvalidDataError("no examples in '" + o.input_path + "'");
    const ConfusionReport report = evaluate(model, data, o.c_bound.value_or(model.c_bound()));
    const std::span<const ConfusionReport> one(&report, 1);
    const std::string text = o.csv ? render_report_csv(one) : render_report(one, o.title);
    out << text;
    if (o.out_path) {
      std::ofstream file(*o.out_path, std::ios::binary | std::ios::trunc);
      if (!file) throw Error("cannot open '" + *o.out_path + "' for writing");
      file << text;
    }
    return kExitOk;
  });
}

/// Writes a seeded synthetic cohort as a sparse file, one line per sample.
inline int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    SyntheticCohortSpec spec = random_cohort_spec(o.n, o.dim, o.noise, o.seed);
    spec.planted_bias = o.bias;
    spec.validate();
    const Dataset cohort = generate_cohort(spec);
    // Cohorts are dense, so the largest index already gives the dimension.
    std::vector<SparseExample> rows;
    rows.reserve(cohort.size());
    for (const auto& ex : cohort) rows.push_back(to_sparse(ex));
    write_sparse(o.out_path, rows);
    std::size_t n_pos = 0;
    for (const auto& ex : cohort) n_pos += ex.y.is_positive() ? 1 : 0;
    out << cohort.size() << ' ' << n_pos << ' ' << cohort.size() - n_pos << '\n';
    return kExitOk;
  });
}

}  // namespace margin_forge::cli

#endif  // MARGIN_FORGE_COMMANDS_HPP
