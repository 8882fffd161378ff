#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "margin_forge/eval.hpp"
#include "margin_forge/smo.hpp"
#include "support/fixtures.hpp"

namespace mf = margin_forge;

namespace {

// The four published evaluation rows.
std::vector<mf::ConfusionReport> published_rows() {
  return {mf::ConfusionReport::from_counts(212, 788, 1.0, 32, 24),
          mf::ConfusionReport::from_counts(212, 788, 2.0, 23, 18),
          mf::ConfusionReport::from_counts(409, 591, 1.0, 37, 116),
          mf::ConfusionReport::from_counts(1055, 2945, 1.0, 168, 270)};
}

std::size_t planted_disagreements(const mf::SyntheticCohortSpec& spec, const mf::Dataset& data) {
  std::size_t flips = 0;
  for (const auto& ex : data) {
    double score = spec.planted_bias;
    const auto x = ex.x.to_dense();
    for (std::size_t j = 0; j < x.size(); ++j) score += spec.planted_weights[j] * x[j];
    if ((score > 0.0) != ex.y.is_positive()) ++flips;
  }
  return flips;
}

}  // namespace

TEST(ConfusionReport, PublishedRowsAreConsistent) {
  const auto rows = published_rows();
  const std::vector<std::size_t> totals = {1000, 1000, 1000, 4000};
  const std::vector<std::size_t> errors = {56, 41, 153, 438};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_TRUE(rows[i].consistent());
    EXPECT_EQ(rows[i].n_total, totals[i]);
    EXPECT_EQ(rows[i].misclassified, errors[i]);
  }
}

TEST(ConfusionReport, RejectsImpossibleCounts) {
  EXPECT_THROW(mf::ConfusionReport::from_counts(3, 4, 1.0, 4, 0), mf::InvalidDataError);
  EXPECT_THROW(mf::ConfusionReport::from_counts(3, 4, 1.0, 0, 5), mf::InvalidDataError);
  mf::ConfusionReport r = mf::ConfusionReport::from_counts(3, 4, 1.0, 1, 1);
  r.misclassified = 3;
  EXPECT_FALSE(r.consistent());
}

TEST(RenderReport, PublishedTable) {
  const auto rows = published_rows();
  const std::string expected =
      "Test | No of Patients | +1 labeled | -1 labeled | C(bound) | Misclassified | postoneg | negtopos\n"
      "-----+----------------+------------+------------+----------+---------------+----------+---------\n"
      "   1 |           1000 |        212 |        788 |        1 |            56 |       32 |       24\n"
      "   2 |           1000 |        212 |        788 |        2 |            41 |       23 |       18\n"
      "   3 |           1000 |        409 |        591 |        1 |           153 |       37 |      116\n"
      "   4 |           4000 |       1055 |       2945 |        1 |           438 |      168 |      270\n";
  EXPECT_EQ(mf::render_report(rows), expected);
  EXPECT_EQ(mf::render_report(rows, "Summary").substr(0, 8), "Summary\n");
}

TEST(RenderReport, HeaderAndZeroRow) {
  const std::vector<mf::ConfusionReport> rows = {mf::ConfusionReport::from_counts(0, 0, 0.5, 0, 0)};
  const std::string out = mf::render_report(rows);
  std::istringstream lines(out);
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "Test | No of Patients | +1 labeled | -1 labeled | C(bound) | Misclassified | postoneg | negtopos");
  std::string rule;
  std::string row;
  std::getline(lines, rule);
  std::getline(lines, row);
  EXPECT_EQ(row.size(), header.size());
  EXPECT_NE(row.find(" 0.5 |"), std::string::npos);
  EXPECT_THROW(mf::render_report({}), mf::InvalidDataError);
  EXPECT_THROW(mf::render_report_csv({}), mf::InvalidDataError);
}

TEST(RenderReport, Csv) {
  const auto rows = published_rows();
  const std::string csv = mf::render_report_csv(std::span(rows).first(1));
  EXPECT_EQ(csv,
            "Test,No of Patients,+1 labeled,-1 labeled,C(bound),Misclassified,postoneg,negtopos\n"
            "1,1000,212,788,1,56,32,24\n");
}

TEST(Split, SizesAndStratification) {
  mf::Dataset data;
  for (int i = 0; i < 10; ++i) {
    data.push_back({mf::FeatureVector::dense({static_cast<double>(i)}),
                    i < 4 ? mf::Label::positive() : mf::Label::negative()});
  }
  const auto [train, test] = mf::split(data, 0.8, 1);
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(test.size(), 2u);
  const auto positives = [](const mf::Dataset& d) {
    return std::count_if(d.begin(), d.end(), [](const mf::Example& e) { return e.y.is_positive(); });
  };
  EXPECT_GE(positives(test), 0);
  EXPECT_GE(positives(train), 3);
  EXPECT_LT(static_cast<std::size_t>(positives(train)), train.size());
}

TEST(Split, DeterministicOrderStableAndPartitioning) {
  const auto data = mf::testing::random_dataset(101, 3, 17);
  const auto a = mf::split(data, 0.7, 5);
  const auto b = mf::split(data, 0.7, 5);
  ASSERT_EQ(a.first.size(), b.first.size());
  for (std::size_t i = 0; i < a.first.size(); ++i) EXPECT_EQ(a.first[i].x, b.first[i].x);
  EXPECT_EQ(a.first.size() + a.second.size(), data.size());

  // Each split is a subsequence of the input.
  auto subsequence = [&](const mf::Dataset& part) {
    std::size_t k = 0;
    for (const auto& ex : data) {
      if (k < part.size() && part[k].x == ex.x) ++k;
    }
    return k == part.size();
  };
  EXPECT_TRUE(subsequence(a.first));
  EXPECT_TRUE(subsequence(a.second));

  // Both classes appear on both sides.
  for (const auto* part : {&a.first, &a.second}) {
    EXPECT_TRUE(std::any_of(part->begin(), part->end(), [](const auto& e) { return e.y.is_positive(); }));
    EXPECT_TRUE(std::any_of(part->begin(), part->end(), [](const auto& e) { return !e.y.is_positive(); }));
  }
  EXPECT_THROW(mf::split(data, 0.0, 1), mf::InvalidDataError);
  EXPECT_THROW(mf::split(data, 1.0, 1), mf::InvalidDataError);
}

TEST(Cohort, NoiselessIsLinearlyConsistent) {
  const auto spec = mf::random_cohort_spec(500, 5, 0.0, 3);
  const auto data = mf::generate_cohort(spec);
  ASSERT_EQ(data.size(), 500u);
  EXPECT_EQ(planted_disagreements(spec, data), 0u);
  for (const auto& ex : data) {
    for (double v : ex.x.to_dense()) {
      EXPECT_GE(v, -1.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(Cohort, PinnedFlipCount) {
  const auto spec = mf::random_cohort_spec(1000, 20, 0.05, 2024);
  const auto data = mf::generate_cohort(spec);
  const auto flips = planted_disagreements(spec, data);
  EXPECT_EQ(flips, 61u);
}

TEST(Cohort, DeterministicAndValidated) {
  const auto spec = mf::random_cohort_spec(50, 4, 0.1, 8);
  const auto a = mf::generate_cohort(spec);
  const auto b = mf::generate_cohort(spec);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].y, b[i].y);
  }
  auto bad = spec;
  bad.label_noise_rate = 0.5;
  EXPECT_THROW(mf::generate_cohort(bad), mf::InvalidDataError);
  bad = spec;
  bad.planted_weights.assign(4, 0.0);
  EXPECT_THROW(mf::generate_cohort(bad), mf::InvalidDataError);
  bad = spec;
  bad.planted_weights.pop_back();
  EXPECT_THROW(mf::generate_cohort(bad), mf::DimensionError);
}

TEST(Evaluate, MatchesPredict) {
  const auto data = mf::testing::random_dataset(80, 3, 21);
  const auto model = mf::train(data, mf::TrainConfig{}).model;
  const auto r = mf::evaluate(model, data, 1.0);
  std::size_t postoneg = 0;
  std::size_t negtopos = 0;
  for (const auto& ex : data) {
    const bool p = mf::predict(model, ex.x).is_positive();
    if (ex.y.is_positive() && !p) ++postoneg;
    if (!ex.y.is_positive() && p) ++negtopos;
  }
  EXPECT_EQ(r.postoneg, postoneg);
  EXPECT_EQ(r.negtopos, negtopos);
  EXPECT_EQ(r.n_total, data.size());
  EXPECT_TRUE(r.consistent());
}

TEST(Evaluate, HoldoutReportsBothParts) {
  const auto data = mf::generate_cohort(mf::random_cohort_spec(300, 4, 0.0, 12));
  mf::TrainConfig cfg;
  cfg.c_bound = 10.0;
  const auto ev = mf::evaluate_with_holdout(data, cfg, 0.8);
  EXPECT_EQ(ev.resubstitution.n_total, 240u);
  EXPECT_EQ(ev.holdout.n_total, 60u);
  EXPECT_EQ(ev.resubstitution.c_bound, 10.0);
  EXPECT_LE(ev.holdout.misclassified, 6u);
  EXPECT_GT(ev.diagnostics.n_support_vectors, 0u);
}
