// margin-forge: encode clinical/genotype cohorts, train soft-margin SVMs and
// report errors as Test / No of Patients / ... / postoneg / negtopos rows.
//
// Verbosity comes from MARGIN_FORGE_LOG (quiet, info, debug).

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "margin_forge/commands.hpp"

namespace mf = margin_forge::cli;

int main(int argc, char** argv) {
  CLI::App app{"margin-forge: soft-margin SVM toolkit for clinical and genotype records"};
  app.require_subcommand(1);
  const mf::Verbosity verbosity = mf::parse_verbosity(std::getenv("MARGIN_FORGE_LOG"));

  mf::EncodeOptions encode;
  std::string label_fields;
  std::string true_token;
  std::string state_in;
  std::string state_out;
  auto* enc = app.add_subcommand("encode", "Encode a CSV cohort into the sparse label-index format");
  enc->add_option("--csv", encode.csv_path, "Input CSV with a header line")->required()->check(CLI::ExistingFile);
  enc->add_option("--schema", encode.schema_path, "Schema file")->required()->check(CLI::ExistingFile);
  enc->add_option("-o,--out", encode.out_path, "Output sparse file")->required();
  enc->add_option("--label-fields", label_fields, "Comma-separated history fields (overrides @label)");
  enc->add_option("--true-token", true_token, "Token marking a positive history field");
  enc->add_option("--load-state", state_in, "Reuse fitted numeric statistics")->check(CLI::ExistingFile);
  enc->add_option("--save-state", state_out, "Write fitted numeric statistics");

  mf::TrainOptions trainopt;
  auto* tr = app.add_subcommand("train", "Train a model on a sparse file");
  tr->add_option("input", trainopt.input_path, "Sparse training file")->required()->check(CLI::ExistingFile);
  tr->add_option("-o,--model", trainopt.model_path, "Output model file")->required();
  tr->add_option("-c", trainopt.c_bound, "C bound (soft-margin penalty), > 0")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--kernel", trainopt.kernel, "linear, rbf or poly")
      ->check(CLI::IsMember({"linear", "rbf", "poly", "polynomial"}))
      ->capture_default_str();
  tr->add_option("--gamma", trainopt.gamma, "rbf/poly gamma")->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--degree", trainopt.degree, "poly degree")->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--coef0", trainopt.coef0, "poly coef0")->capture_default_str();
  tr->add_option("--tol", trainopt.tolerance, "KKT tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--max-iter", trainopt.max_iterations, "Subproblem step budget")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--seed", trainopt.seed, "Seed of the solver's fallback search")->capture_default_str();

  mf::PredictOptions predictopt;
  std::string predict_out;
  auto* pr = app.add_subcommand("predict", "Print label and decision value per example");
  pr->add_option("-m,--model", predictopt.model_path, "Model file")->required()->check(CLI::ExistingFile);
  pr->add_option("input", predictopt.input_path, "Sparse file")->required()->check(CLI::ExistingFile);
  pr->add_option("-o,--out", predict_out, "Write predictions here instead of stdout");

  mf::EvaluateOptions evalopt;
  double eval_c = 0.0;
  std::string eval_out;
  auto* ev = app.add_subcommand("evaluate", "Report misclassified/postoneg/negtopos for a labeled file");
  ev->add_option("-m,--model", evalopt.model_path, "Model file")->required()->check(CLI::ExistingFile);
  ev->add_option("input", evalopt.input_path, "Labeled sparse file")->required()->check(CLI::ExistingFile);
  auto* eval_c_opt = ev->add_option("-c", eval_c, "C shown in the report (default: from the model)")
                         ->check(CLI::PositiveNumber);
  ev->add_flag("--csv", evalopt.csv, "Comma-separated output");
  ev->add_option("--report", eval_out, "Also write the report to this file");
  ev->add_option("--title", evalopt.title, "Caption above the table, e.g. resubstitution or hold-out");

  mf::SynthOptions synth;
  auto* sy = app.add_subcommand("synth", "Write a synthetic cohort with a planted hyperplane");
  sy->add_option("--n", synth.n, "Number of samples")->check(CLI::PositiveNumber)->capture_default_str();
  sy->add_option("--dim", synth.dim, "Dimension")->check(CLI::PositiveNumber)->capture_default_str();
  sy->add_option("--noise", synth.noise, "Label flip probability in [0, 0.5)")
      ->check(CLI::Range(0.0, 0.5))
      ->capture_default_str();
  sy->add_option("--bias", synth.bias, "Planted bias")->capture_default_str();
  sy->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  sy->add_option("-o,--out", synth.out_path, "Output sparse file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mf::kExitError;
  }

  if (*enc) {
    if (!label_fields.empty()) {
      std::string field;
      for (char ch : label_fields + ",") {
        if (ch == ',') {
          if (!field.empty()) encode.label_fields.push_back(field);
          field.clear();
        } else {
          field.push_back(ch);
        }
      }
    }
    if (enc->count("--true-token") > 0) encode.true_token = true_token;
    if (!state_in.empty()) encode.state_in = state_in;
    if (!state_out.empty()) encode.state_out = state_out;
    return mf::cmd_encode(encode, std::cout, std::cerr, verbosity);
  }
  if (*tr) return mf::cmd_train(trainopt, std::cout, std::cerr, verbosity);
  if (*pr) {
    if (!predict_out.empty()) predictopt.out_path = predict_out;
    return mf::cmd_predict(predictopt, std::cout, std::cerr);
  }
  if (*ev) {
    if (eval_c_opt->count() > 0) evalopt.c_bound = eval_c;
    if (!eval_out.empty()) evalopt.out_path = eval_out;
    return mf::cmd_evaluate(evalopt, std::cout, std::cerr);
  }
  if (*sy) {
    if (synth.noise >= 0.5) {
      std::cerr << "error: --noise must be below 0.5\n";
      return mf::kExitError;
    }
    return mf::cmd_synth(synth, std::cout, std::cerr);
  }
  return mf::kExitError;
}
