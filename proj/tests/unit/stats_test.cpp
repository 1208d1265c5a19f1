#include <gtest/gtest.h>

#include <cmath>

#include "mimogt/csv.hpp"
#include "mimogt/rng.hpp"
#include "mimogt/stats.hpp"

using namespace mimogt;

TEST(Wilson, KnownInterval) {
  // 10/100 at z = 1.96: [0.0552, 0.1744]
  const auto e = wilson_interval(10, 100, 1.96);
  EXPECT_NEAR(e.ci_low, 0.05523, 1e-4);
  EXPECT_NEAR(e.ci_high, 0.17437, 1e-4);
  EXPECT_DOUBLE_EQ(e.point, 0.1);
}

TEST(Wilson, EdgeCounts) {
  const auto zero = wilson_interval(0, 1000);
  EXPECT_EQ(zero.ci_low, 0.0);
  EXPECT_GT(zero.ci_high, 0.0);
  const auto all = wilson_interval(1000, 1000);
  EXPECT_EQ(all.ci_high, 1.0);
  EXPECT_LT(all.ci_low, 1.0);
  EXPECT_THROW(wilson_interval(0, 0), std::invalid_argument);
  EXPECT_THROW(wilson_interval(5, 4), std::invalid_argument);
}

TEST(Wilson, ShrinksAsInverseRootProperty) {
  for (double p : {0.01, 0.1, 0.3, 0.5}) {
    for (std::size_t n : {1000U, 10000U, 100000U}) {
      const auto a = wilson_interval(static_cast<std::size_t>(p * n), n);
      const auto b = wilson_interval(static_cast<std::size_t>(p * 4 * n), 4 * n);
      EXPECT_NEAR(b.width() / (0.5 * a.width()), 1.0, 0.1);
    }
  }
}

TEST(Wilson, CoverageProperty) {
  auto rng = make_stream(61, StreamTag::misc, 0);
  const double p = 0.2;
  int covered = 0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    std::size_t s = 0;
    for (int i = 0; i < 500; ++i) s += uniform01(rng) < p;
    covered += wilson_interval(s, 500).contains(p);
  }
  EXPECT_GE(covered, static_cast<int>(0.98 * reps));
}

TEST(KolmogorovSmirnov, CriticalValue) {
  EXPECT_NEAR(ks_critical_value(1'000'000), 1.62762 / 1000.0, 1e-6);
  EXPECT_THROW(ks_critical_value(0), std::invalid_argument);
}

TEST(KolmogorovSmirnov, AcceptsTrueLawRejectsWrongMean) {
  auto rng = make_stream(62, StreamTag::misc, 0);
  std::vector<double> x(100000);
  for (auto& v : x) v = -2.0 * std::log(1.0 - uniform01(rng));
  auto y = x;
  EXPECT_LT(ks_statistic_exponential(x, 2.0), ks_critical_value(x.size()));
  EXPECT_GT(ks_statistic_exponential(y, 2.1), ks_critical_value(y.size()));
}

TEST(Moments, Welford) {
  const auto m = sample_moments({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.variance, 5.0 / 3.0, 1e-15);
}

TEST(Csv, TableLayout) {
  CsvTable t({"a", "b"});
  t.add_meta("seed", "3");
  t.add_row({"1", format_number(0.1 + 0.2)});
  EXPECT_EQ(t.str(), "# seed: 3\na,b\n1,0.3\n");
  EXPECT_THROW(t.add_row({"1"}), std::logic_error);
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
}
