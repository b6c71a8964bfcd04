#include "ead/metrics.hpp"

#include <sstream>
#include <vector>

#include <gtest/gtest.h>

using ead::SweepRun;

TEST(Usage, Counts) {
  const auto u = ead::make_usage(70, 30, 4);
  EXPECT_DOUBLE_EQ(u.alpha, 0.7);
  EXPECT_DOUBLE_EQ(u.alpha + u.beta, 1.0);
  EXPECT_EQ(u.total(), 100u);
  EXPECT_THROW(ead::make_usage(0, 0, 0), ead::Error);
}

TEST(Usage, FromTrace) {
  ead::GenerationTrace t;
  for (std::size_t i = 0; i < 10; ++i) t.events.push_back({i, 0, i < 6 ? ead::ModelRole::Small : ead::ModelRole::Large, 0, 0, 0, i == 5});
  const auto u = ead::usage_from_trace(t);
  EXPECT_EQ(u.tokens_small, 6u);
  EXPECT_EQ(u.tokens_large, 4u);
  EXPECT_EQ(u.switches, 1u);
}

TEST(ParameterRatio, Anchors) {
  // Oracles by hand: 100 * 0.5 / 14; 100 * (0.84 + 0.16 * 3) / 3; all large.
  EXPECT_NEAR(ead::parameter_ratio(1.0, 0.0, 0.5, 14.0), 3.5714285714, 1e-9);
  EXPECT_NEAR(ead::parameter_ratio(0.84, 0.16, 1.0, 3.0), 44.0, 1e-9);
  EXPECT_DOUBLE_EQ(ead::parameter_ratio(0.0, 1.0, 1.5, 14.0), 100.0);
  EXPECT_THROW(ead::parameter_ratio(0.5, 0.5, 3.0, 1.0), ead::Error);
  EXPECT_THROW(ead::parameter_ratio(0.5, 0.5, 0.0, 1.0), ead::Error);
}

TEST(ParameterRatio, IncreasesWithLargeShare) {
  double prev = -1.0;
  for (int k = 0; k <= 100; ++k) {
    const double beta = k / 100.0;
    const double r = ead::parameter_ratio(1.0 - beta, beta, 3.0, 11.0);
    EXPECT_GT(r, prev);
    EXPECT_GE(r, 100.0 * 3.0 / 11.0 - 1e-12);
    EXPECT_LE(r, 100.0 + 1e-12);
    prev = r;
  }
}

TEST(Sweep, AveragesPerTau) {
  const std::vector<SweepRun> runs{
      {0.5, ead::make_usage(80, 20, 1), 1, 3},
      {0.5, ead::make_usage(60, 40, 1), 1, 3},
  };
  const auto rows = ead::sweep_aggregate(runs);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].large_usage_percent, 30.0);
  EXPECT_NEAR(rows[0].param_ratio_percent, 100.0 * (0.7 + 0.3 * 3) / 3, 1e-9);
  EXPECT_EQ(rows[0].runs, 2u);
  EXPECT_FALSE(rows[0].score_percent);
}

TEST(Sweep, RowsDescendByTau) {
  std::vector<SweepRun> runs;
  for (double tau : ead::default_tau_grid()) runs.push_back({tau, ead::make_usage(5, 5, 0), 1, 3});
  const auto rows = ead::sweep_aggregate(runs);
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_TRUE(std::isinf(rows.front().tau));
  EXPECT_EQ(rows.back().tau, 0.0);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(rows[i - 1].tau, rows[i].tau);

  std::ostringstream csv;
  ead::write_sweep_csv(rows, csv);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, ead::kSweepCsvHeader);
  std::getline(in, line);
  EXPECT_EQ(line, "inf,50,66.66666666666667,,1");
}

TEST(Table, PublishedAnchorsRecompute) {
  const auto report = ead::validate_reference_table();
  ASSERT_EQ(report.checks.size(), 32u);
  // Hand oracle: 100 * 3/11, 100 * (0.917 * 0.5 + 0.083 * 14) / 14, 100 * (0.5 * 1 + 0.5 * 3) / 3.
  EXPECT_NEAR(report.checks[8].computed_ratio_percent, 27.272727, 1e-5);
  EXPECT_NEAR(report.checks[17].computed_ratio_percent, 11.575, 1e-3);
  EXPECT_NEAR(ead::parameter_ratio(0.5, 0.5, 1, 3), 66.666667, 1e-5);
  for (const auto& c : report.checks) {
    if (c.row.large_usage_percent == 100.0) {
      EXPECT_DOUBLE_EQ(c.computed_ratio_percent, 100.0);
    }
  }
}

TEST(Table, CorruptedRowFails) {
  std::vector<ead::ReferenceRow> rows(ead::reference_rows().begin(), ead::reference_rows().end());
  rows[3].param_ratio_percent += 5.0;
  const auto report = ead::validate_reference_table(rows);
  EXPECT_FALSE(report.checks[3].ok);
  EXPECT_NEAR(report.checks[3].deviation, 5.0, 0.5);
}

TEST(Table, ScoresDoNotAffectVerdict) {
  std::vector<ead::ReferenceRow> rows(ead::reference_rows().begin(), ead::reference_rows().end());
  const auto before = ead::validate_reference_table(rows);
  for (auto& r : rows) r.score_percent = -r.score_percent - 1000.0;
  const auto after = ead::validate_reference_table(rows);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(before.checks[i].ok, after.checks[i].ok);
}
