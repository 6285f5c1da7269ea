#include <gtest/gtest.h>

#include <random>
#include <set>

#include "peninsula/fractions.hpp"
#include "support.hpp"

using namespace peninsula;
using support::make_vps;
using support::matrix_from;

TEST(Fractions, PartitionOverRandomMatrices) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t nvp = 1 + rng() % 6;
    auto m = support::random_matrix(rng, nvp, 10, 20, 0.2, 0.5);
    auto f = block_time_fractions(m);
    if (f.denominator() == 0) continue;
    EXPECT_NEAR(f.f_all_up() + f.f_all_down() + f.f_disagree(), 1.0, 1e-9);
    // Denominator counts exactly the cells with some valid observer.
    std::uint64_t valid = 0;
    for (std::size_t b = 0; b < 10; ++b)
      for (std::size_t r = 0; r < 20; ++r) {
        auto row = m.row(b, r);
        valid += std::any_of(row.begin(), row.end(), [](auto s) { return s != ReachState::Unknown; });
      }
    EXPECT_EQ(f.denominator(), valid);
    for (std::size_t v = 0; v < nvp; ++v) {
      std::vector<std::size_t> one{v};
      EXPECT_EQ(block_time_fractions(m, one).disagree, 0u);
    }
  }
}

TEST(Fractions, EmptyDenominatorIsZero) {
  auto m = matrix_from(make_vps(2), {{"??"}});
  auto f = block_time_fractions(m);
  EXPECT_EQ(f.denominator(), 0u);
  EXPECT_EQ(f.f_disagree(), 0.0);
}

TEST(Fractions, Combinations) {
  std::size_t total = 0;
  for (std::size_t k = 1; k <= 6; ++k) total += combinations(6, k).size();
  EXPECT_EQ(total, 63u);
  auto c = combinations(4, 2);
  ASSERT_EQ(c.size(), 6u);
  EXPECT_EQ(c.front(), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(c.back(), (std::vector<std::size_t>{2, 3}));
  EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
  EXPECT_TRUE(combinations(3, 4).empty());
}

TEST(Fractions, ConvergenceCurveOrdering) {
  std::mt19937_64 rng(4);
  auto m = support::random_matrix(rng, 4, 6, 10);
  auto curve = convergence_curve(m);
  ASSERT_EQ(curve.size(), 15u);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    EXPECT_LE(curve[i - 1].subset.size(), curve[i].subset.size());
  }
  auto means = mean_by_size(curve);
  ASSERT_EQ(means.size(), 4u);
  EXPECT_EQ(means[0].samples, 4u);
  EXPECT_EQ(means[0].mean_disagree, 0.0);
  ConvergenceConfig cfg;
  cfg.max_per_size = 2;
  EXPECT_EQ(convergence_curve(m, cfg).size(), 2u + 2u + 2u + 1u);
}

TEST(Fractions, ConvergenceJobsInvariant) {
  std::mt19937_64 rng(6);
  auto m = support::random_matrix(rng, 6, 20, 20);
  ConvergenceConfig one, four;
  four.jobs = 4;
  auto a = convergence_curve(m, one);
  auto b = convergence_curve(m, four);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].subset, b[i].subset);
    EXPECT_EQ(a[i].fractions.disagree, b[i].fractions.disagree);
  }
}

// Frozen from scipy.stats.t.ppf(1 - 0.0025/2, df).
TEST(TTest, CriticalValues) {
  const std::pair<std::size_t, double> table[] = {{1, 254.64659994872997}, {2, 19.962480451564034},
                                                  {3, 9.464899663536396},  {5, 5.604165478498199},
                                                  {9, 4.145788828443339},  {29, 3.310228583088527}};
  for (auto [df, crit] : table) {
    std::vector<double> x(df + 1, 0.0);
    x[0] = 1.0;
    EXPECT_NEAR(one_sample_t_test(x).critical, crit, 1e-9 * crit) << "df=" << df;
  }
  std::vector<double> ten(10, 0.0);
  ten[0] = 1.0;
  EXPECT_NEAR(one_sample_t_test(ten, 0.95).critical, 2.2621571628540993, 1e-9);
}

// Frozen from scipy.stats.ttest_1samp.
TEST(TTest, Statistics) {
  std::vector<double> x{0.012, -0.004, 0.007, 0.001, 0.009, -0.002, 0.005, 0.011};
  auto r = one_sample_t_test(x);
  EXPECT_NEAR(r.mean, 0.004875, 1e-12);
  EXPECT_NEAR(r.t, 2.30324395916412, 1e-9);
  EXPECT_EQ(r.df, 7u);
  EXPECT_FALSE(r.reject);
  std::vector<double> y{0.31, 0.29, 0.35, 0.33};
  auto s = one_sample_t_test(y);
  EXPECT_NEAR(s.t, 24.78709341572747, 1e-9);
  EXPECT_TRUE(s.reject);
}

TEST(TTest, DegenerateInputs) {
  std::vector<double> one{1.0};
  EXPECT_THROW(one_sample_t_test(one), InputError);
  std::vector<double> zeros{0.0, 0.0, 0.0};
  EXPECT_FALSE(one_sample_t_test(zeros).reject);
  std::vector<double> constant{0.1, 0.1, 0.1};
  EXPECT_TRUE(one_sample_t_test(constant).reject);
  std::vector<double> x{1.0, 2.0};
  EXPECT_THROW(one_sample_t_test(x, 1.0), InputError);
}

TEST(TTest, DisjointTripletPairs) {
  auto subsets = combinations(6, 3);
  std::vector<std::vector<double>> values(subsets.size(), std::vector<double>{0.1, 0.2, 0.3});
  values[0] = {0.1, 0.21, 0.29};
  auto tests = equivalence_from_fractions(subsets, values);
  EXPECT_EQ(tests.size(), 10u);
  for (const auto& t : tests) {
    std::set<std::size_t> all(t.first.begin(), t.first.end());
    all.insert(t.second.begin(), t.second.end());
    EXPECT_EQ(all.size(), 6u);
  }
}

TEST(TTest, EquivalenceAcrossPeriods) {
  std::mt19937_64 rng(12);
  std::vector<RoundMatrix> periods;
  for (int p = 0; p < 4; ++p) periods.push_back(support::random_matrix(rng, 6, 10, 10));
  auto res = subset_equivalence_test(periods);
  EXPECT_EQ(res.size(), 10u);
  for (const auto& r : res) EXPECT_EQ(r.test.df, 3u);
  EXPECT_THROW(subset_equivalence_test(std::span<const RoundMatrix>(periods.data(), 1)), InputError);
}

TEST(Similarity, HandExample) {
  // Rounds: v0 v1 v2 v3
  //  0: U U D D  -> pair(0,1) both up, others down: p1
  //  1: D D U U  -> p0
  //  2: U D U U  -> d*
  //  3: U U U D  -> not counted (v2 agrees)
  //  4: U ? D D  -> skipped
  auto m = matrix_from(make_vps(4), {{"UUDD", "DDUU", "UDUU", "UUUD", "U?DD"}});
  auto s = similarity(m, 0, 1);
  EXPECT_EQ(s.p1, 1u);
  EXPECT_EQ(s.p0, 1u);
  EXPECT_EQ(s.d_star, 1u);
  ASSERT_TRUE(s.s);
  EXPECT_DOUBLE_EQ(*s.s, 2.0 / 3.0);
  EXPECT_THROW(similarity(m, 0, 0), InputError);
  EXPECT_EQ(similarity_matrix(m).size(), 6u);
}

TEST(Similarity, NeedsThreeVps) {
  auto m = matrix_from(make_vps(2), {{"UD"}});
  EXPECT_THROW(similarity(m, 0, 1), InputError);
}
