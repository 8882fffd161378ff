#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <thread>
#include <vector>

#include "margin_forge/io.hpp"
#include "margin_forge/smo.hpp"
#include "support/dual_oracle.hpp"
#include "support/fixtures.hpp"

namespace mf = margin_forge;
using mf::FeatureVector;
using mf::Kernel;
using mf::Label;

namespace {

mf::Dataset two_point() {
  return {{FeatureVector::dense({-1.0}), Label::negative()}, {FeatureVector::dense({1.0}), Label::positive()}};
}

mf::TrainResult train_two_point() {
  mf::TrainConfig cfg;
  cfg.c_bound = 10.0;
  return mf::train(two_point(), cfg);
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureVector / Label

TEST(FeatureVector, RejectsBadIndices) {
  EXPECT_THROW(FeatureVector(3, {{2, 1.0}, {2, 1.0}}), mf::InvalidDataError);
  EXPECT_THROW(FeatureVector(3, {{3, 1.0}, {1, 1.0}}), mf::InvalidDataError);
  EXPECT_THROW(FeatureVector(3, {{0, 1.0}}), mf::InvalidDataError);
  EXPECT_THROW(FeatureVector(2, {{3, 1.0}}), mf::DimensionError);
  EXPECT_THROW(FeatureVector(2, {{1, std::nan("")}}), mf::InvalidDataError);
  EXPECT_THROW(FeatureVector(2, {{1, INFINITY}}), mf::InvalidDataError);
}

TEST(FeatureVector, DenseDropsZerosAndKeepsDim) {
  const auto v = FeatureVector::dense({0.0, 2.0, 0.0, -1.0});
  EXPECT_EQ(v.dim(), 4u);
  EXPECT_EQ(v.nnz(), 2u);
  EXPECT_EQ(v.at(2), 2.0);
  EXPECT_EQ(v.at(3), 0.0);
  EXPECT_EQ(v.to_dense(), (std::vector<double>{0.0, 2.0, 0.0, -1.0}));
}

TEST(Label, OnlyPlusMinusOne) {
  EXPECT_EQ(Label::from_int(1), Label::positive());
  EXPECT_EQ(Label::from_int(-1), Label::negative());
  EXPECT_THROW(Label::from_int(0), mf::InvalidDataError);
  EXPECT_THROW(Label::from_int(2), mf::InvalidDataError);
}

// ---------------------------------------------------------------------------
// kernel_eval

TEST(KernelEval, Linear) {
  EXPECT_EQ(mf::kernel_eval(Kernel::linear(), FeatureVector::dense({1, 2}), FeatureVector::dense({3, 4})), 11.0);
}

TEST(KernelEval, RbfOfPointWithItselfIsOne) {
  const Kernel k = Kernel::rbf(0.5);
  for (const auto& x : {FeatureVector::dense({0.3, -7.1, 2.0}), FeatureVector::dense({0, 0, 0}),
                        FeatureVector::dense({1e3, 1e-3, 5})}) {
    EXPECT_EQ(mf::kernel_eval(k, x, x), 1.0);
  }
}

TEST(KernelEval, Polynomial) {
  const auto a = FeatureVector::dense({1, 0});
  EXPECT_EQ(mf::kernel_eval(Kernel::polynomial(2, 1.0, 1.0), a, a), 4.0);
}

TEST(KernelEval, RbfMatchesDirectFormula) {
  const auto a = FeatureVector::dense({0.5, -1.0, 2.0});
  const auto b = FeatureVector::dense({1.5, 0.0, 1.0});
  EXPECT_NEAR(mf::kernel_eval(Kernel::rbf(0.25), a, b), std::exp(-0.25 * 3.0), 1e-15);
}

TEST(KernelEval, SymmetricOnRandomPairs) {
  const auto data = mf::testing::random_dataset(40, 5, 11);
  for (const Kernel& k : {Kernel::linear(), Kernel::rbf(0.7), Kernel::polynomial(3, 0.5, 2.0)}) {
    for (std::size_t i = 0; i + 1 < data.size(); ++i) {
      const double ab = mf::kernel_eval(k, data[i].x, data[i + 1].x);
      EXPECT_EQ(ab, mf::kernel_eval(k, data[i + 1].x, data[i].x));
      EXPECT_TRUE(std::isfinite(ab));
    }
  }
}

TEST(KernelEval, DimensionMismatch) {
  EXPECT_THROW(mf::kernel_eval(Kernel::linear(), FeatureVector::dense({1}), FeatureVector::dense({1, 2})),
               mf::DimensionError);
}

TEST(Kernel, ParameterValidation) {
  EXPECT_THROW(Kernel::rbf(0.0), mf::InvalidDataError);
  EXPECT_THROW(Kernel::rbf(-1.0), mf::InvalidDataError);
  EXPECT_THROW(Kernel::polynomial(0, 1.0, 1.0), mf::InvalidDataError);
  EXPECT_THROW(Kernel::polynomial(2, 1.0, 0.0), mf::InvalidDataError);
}

// ---------------------------------------------------------------------------
// train

TEST(Train, SymmetricTwoPointProblem) {
  const auto r = train_two_point();
  ASSERT_TRUE(r.model.explicit_weights().has_value());
  EXPECT_NEAR((*r.model.explicit_weights())[0], 1.0, 1e-12);
  EXPECT_NEAR(r.model.bias(), 0.0, 1e-12);
  ASSERT_EQ(r.model.support_vectors().size(), 2u);
  EXPECT_NEAR(r.alphas[0], 0.5, 1e-12);
  EXPECT_NEAR(r.alphas[1], 0.5, 1e-12);
  EXPECT_NEAR(r.diagnostics.dual_objective, 0.5, 1e-12);
  EXPECT_EQ(r.diagnostics.n_bounded_svs, 0u);
  EXPECT_NEAR(mf::margin_width(r.model), 2.0, 1e-12);
}

TEST(Train, XorWithRbf) {
  const mf::Dataset xor_set = {{FeatureVector::dense({0, 0}), Label::negative()},
                               {FeatureVector::dense({1, 1}), Label::negative()},
                               {FeatureVector::dense({0, 1}), Label::positive()},
                               {FeatureVector::dense({1, 0}), Label::positive()}};
  mf::TrainConfig cfg;
  cfg.c_bound = 10.0;
  cfg.kernel = Kernel::rbf(1.0);
  const auto r = mf::train(xor_set, cfg);
  for (const auto& ex : xor_set) EXPECT_EQ(mf::predict(r.model, ex.x), ex.y);

  // The oracle agrees on the labels as well.
  const auto p = mf::testing::to_oracle(xor_set, 10.0, mf::testing::OracleKernel::Rbf, 1.0);
  const auto sol = mf::testing::solve_dual_oracle(p);
  for (std::size_t i = 0; i < xor_set.size(); ++i) {
    EXPECT_GT(xor_set[i].y.as_double() * mf::testing::oracle_decision(p, sol, p.x[i]), 0.0);
  }
}

TEST(Train, PreconditionErrors) {
  mf::TrainConfig cfg;
  EXPECT_THROW(mf::train(mf::Dataset{{FeatureVector::dense({1}), Label::positive()}}, cfg), mf::InvalidDataError);
  const mf::Dataset one_class = {{FeatureVector::dense({1}), Label::positive()},
                                 {FeatureVector::dense({2}), Label::positive()}};
  EXPECT_THROW(mf::train(one_class, cfg), mf::SingleClassError);
  const mf::Dataset mixed_dims = {{FeatureVector::dense({1}), Label::positive()},
                                  {FeatureVector::dense({2, 1}), Label::negative()}};
  EXPECT_THROW(mf::train(mixed_dims, cfg), mf::DimensionError);
  cfg.c_bound = 0.0;
  EXPECT_THROW(mf::train(two_point(), cfg), mf::InvalidDataError);
  cfg.c_bound = 1.0;
  cfg.kkt_tolerance = -1.0;
  EXPECT_THROW(mf::train(two_point(), cfg), mf::InvalidDataError);
}

TEST(Train, ExhaustedBudgetCarriesDiagnostics) {
  const auto data = mf::testing::random_dataset(200, 5, 3);
  mf::TrainConfig cfg;
  cfg.c_bound = 10.0;
  cfg.max_passes = 3;
  try {
    mf::train(data, cfg);
    FAIL() << "expected ConvergenceError";
  } catch (const mf::ConvergenceError& e) {
    EXPECT_EQ(e.diagnostics().iterations, 3u);
    EXPECT_GT(e.diagnostics().max_kkt_violation, cfg.kkt_tolerance);
    EXPECT_GT(e.diagnostics().n_support_vectors, 0u);
  }
}

TEST(Train, ConflictingDuplicatesOnlyForceSlack) {
  mf::Dataset data = {{FeatureVector::dense({0.5, 0.5}), Label::positive()},
                      {FeatureVector::dense({0.5, 0.5}), Label::negative()},
                      {FeatureVector::dense({2.0, 2.0}), Label::positive()},
                      {FeatureVector::dense({-2.0, -2.0}), Label::negative()}};
  mf::TrainConfig cfg;
  cfg.c_bound = 1.0;
  const auto r = mf::train(data, cfg);
  EXPECT_LE(r.diagnostics.max_kkt_violation, cfg.kkt_tolerance);
  EXPECT_GE(r.diagnostics.total_slack, 1.0 - 1e-9);
}

TEST(Train, DualFeasibilityAndKktOnRandomData) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto data = mf::testing::random_dataset(120, 4, 100 + seed);
    for (const Kernel& k : {Kernel::linear(), Kernel::rbf(2.0), Kernel::polynomial(2, 1.0, 0.5)}) {
      mf::TrainConfig cfg;
      cfg.c_bound = 2.0;
      cfg.kernel = k;
      const auto r = mf::train(data, cfg);
      double balance = 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        EXPECT_GE(r.alphas[i], 0.0);
        EXPECT_LE(r.alphas[i], cfg.c_bound);
        balance += r.alphas[i] * data[i].y.as_double();
      }
      EXPECT_LE(std::abs(balance), 1e-6);
      // KKT recomputed independently from the model's decision values.
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double yf = data[i].y.as_double() * mf::decision_value(r.model, data[i].x);
        const double a = r.alphas[i];
        if (a == 0.0) {
          EXPECT_GE(yf, 1.0 - cfg.kkt_tolerance);
        } else if (a == cfg.c_bound) {
          EXPECT_LE(yf, 1.0 + cfg.kkt_tolerance);
        } else {
          EXPECT_NEAR(yf, 1.0, cfg.kkt_tolerance);
        }
      }
      for (double c : r.model.sv_coefficients()) EXPECT_LE(std::abs(c), cfg.c_bound);
    }
  }
}

TEST(Train, DualObjectiveNeverDecreases) {
  const auto data = mf::testing::random_dataset(150, 3, 8);
  for (const Kernel& k : {Kernel::linear(), Kernel::rbf(1.0)}) {
    mf::TrainConfig cfg;
    cfg.c_bound = 5.0;
    cfg.kernel = k;
    std::vector<double> trace;
    const auto r = mf::train(data, cfg, [&](std::uint64_t, double d) { trace.push_back(d); });
    ASSERT_EQ(trace.size(), r.diagnostics.iterations);
    for (std::size_t i = 1; i < trace.size(); ++i) ASSERT_GE(trace[i], trace[i - 1]) << "step " << i;
    // The running value tracks the objective recomputed from scratch.
    EXPECT_NEAR(trace.back(), r.diagnostics.dual_objective, 1e-8 * std::abs(r.diagnostics.dual_objective));
  }
}

TEST(Train, MatchesOracleOnSmallProblems) {
  using mf::testing::OracleKernel;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = mf::testing::random_dataset(8, 3, 900 + seed);
    mf::TrainConfig cfg;
    cfg.c_bound = 1.0;
    const auto r = mf::train(data, cfg);
    const auto p = mf::testing::to_oracle(data, 1.0, OracleKernel::Linear);
    const auto sol = mf::testing::solve_dual_oracle(p);
    EXPECT_NEAR(r.diagnostics.dual_objective, sol.dual_objective, 1e-4 * std::abs(sol.dual_objective));
    for (std::size_t i = 0; i < data.size(); ++i) {
      EXPECT_NEAR(mf::decision_value(r.model, data[i].x), mf::testing::oracle_decision(p, sol, p.x[i]), 1e-3);
    }
  }
}

TEST(Train, DeterministicModelBytes) {
  const auto data = mf::testing::random_dataset(300, 6, 21);
  mf::TrainConfig cfg;
  cfg.c_bound = 3.0;
  cfg.kernel = Kernel::rbf(0.5);
  cfg.seed = 99;
  std::ostringstream a;
  std::ostringstream b;
  mf::save_model(a, mf::train(data, cfg).model);
  mf::save_model(b, mf::train(data, cfg).model);
  EXPECT_EQ(a.str(), b.str());
}

// ---------------------------------------------------------------------------
// decision_value / predict / total_slack

TEST(DecisionValue, TwoPointModel) {
  const auto r = train_two_point();
  EXPECT_NEAR(mf::decision_value(r.model, FeatureVector::dense({0.0})), 0.0, 1e-12);
  EXPECT_NEAR(mf::decision_value(r.model, FeatureVector::dense({3.0})), 3.0, 1e-12);
}

TEST(DecisionValue, SingleSupportVector) {
  const auto s = FeatureVector::dense({0.6, 0.8});
  const mf::Model m(Kernel::linear(), -1.0, {s}, {2.0}, 2);
  EXPECT_NEAR(mf::decision_value(m, s), 1.0, 1e-15);
  EXPECT_NEAR(m.expansion_value(s), 1.0, 1e-15);
}

TEST(DecisionValue, DimensionMismatch) {
  const auto r = train_two_point();
  EXPECT_THROW(mf::decision_value(r.model, FeatureVector::dense({1, 2})), mf::DimensionError);
  EXPECT_THROW(mf::predict(r.model, FeatureVector::dense({1, 2})), mf::DimensionError);
}

TEST(DecisionValue, LinearFastPathMatchesExpansion) {
  const auto data = mf::testing::random_dataset(200, 8, 5);
  mf::TrainConfig cfg;
  cfg.c_bound = 1.0;
  const auto r = mf::train(data, cfg);
  const auto probes = mf::testing::random_dataset(1000, 8, 6);
  for (const auto& p : probes) {
    EXPECT_NEAR(mf::decision_value(r.model, p.x), r.model.expansion_value(p.x), 1e-9);
  }
}

TEST(Predict, SidesAndTieBreak) {
  const mf::Model m(Kernel::linear(), 0.0, {FeatureVector::dense({1.0})}, {1.0}, 1);
  EXPECT_EQ(mf::predict(m, FeatureVector::dense({0.5})), Label::positive());
  EXPECT_EQ(mf::predict(m, FeatureVector::dense({-0.5})), Label::negative());
  EXPECT_EQ(mf::predict(m, FeatureVector::dense({0.0})), Label::positive());
}

TEST(TotalSlack, Basics) {
  const auto r = train_two_point();
  EXPECT_NEAR(mf::total_slack(r.model, two_point()), 0.0, 1e-12);

  const mf::Model zero(Kernel::linear(), 0.0, {FeatureVector::dense({1.0})}, {0.0}, 1);
  const mf::Dataset one = {{FeatureVector::dense({5.0}), Label::positive()}};
  EXPECT_EQ(mf::total_slack(zero, one), 1.0);
}

TEST(TotalSlack, NonincreasingInC) {
  // Eight noisy points; the oracle confirms the ordering independently.
  mf::Dataset data = mf::testing::random_dataset(8, 2, 77);
  std::vector<double> slack;
  std::vector<double> oracle_slack;
  for (double c : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    mf::TrainConfig cfg;
    cfg.c_bound = c;
    cfg.kkt_tolerance = 1e-6;
    slack.push_back(mf::train(data, cfg).diagnostics.total_slack);
    const auto p = mf::testing::to_oracle(data, c, mf::testing::OracleKernel::Linear);
    const auto sol = mf::testing::solve_dual_oracle(p);
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      s += std::max(0.0, 1.0 - p.y[i] * mf::testing::oracle_decision(p, sol, p.x[i]));
    }
    oracle_slack.push_back(s);
  }
  for (std::size_t i = 1; i < slack.size(); ++i) {
    EXPECT_LE(slack[i], slack[i - 1] + 1e-6);
    EXPECT_LE(oracle_slack[i], oracle_slack[i - 1] + 1e-6);
    EXPECT_NEAR(slack[i], oracle_slack[i], 1e-3);
  }
}

TEST(Model, ConcurrentPredictionsAgree) {
  const auto data = mf::testing::random_dataset(100, 4, 12);
  mf::TrainConfig cfg;
  cfg.kernel = Kernel::rbf(1.0);
  const auto r = mf::train(data, cfg);
  std::vector<double> serial;
  for (const auto& ex : data) serial.push_back(mf::decision_value(r.model, ex.x));
  std::vector<double> a(data.size());
  std::vector<double> b(data.size());
  std::thread t1([&] { for (std::size_t i = 0; i < data.size(); ++i) a[i] = mf::decision_value(r.model, data[i].x); });
  std::thread t2([&] { for (std::size_t i = 0; i < data.size(); ++i) b[i] = mf::decision_value(r.model, data[i].x); });
  t1.join();
  t2.join();
  EXPECT_EQ(a, serial);
  EXPECT_EQ(b, serial);
}
