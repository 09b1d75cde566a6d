#include <gtest/gtest.h>

#include "oracles/metric_oracle.hpp"
#include "xoff/error.hpp"
#include "xoff/metrics.hpp"
#include "xoff/random.hpp"

using namespace xoff;

namespace {

constexpr Label O = Label::kOffensive;
constexpr Label N = Label::kNotOffensive;

std::vector<int> as_ints(const std::vector<Label>& v) {
  std::vector<int> out;
  for (Label l : v) out.push_back(l == O ? 1 : 0);
  return out;
}

std::vector<Label> random_labels(Rng& rng, std::size_t n, double p_off) {
  std::vector<Label> v(n);
  for (auto& l : v) l = rng.uniform() < p_off ? O : N;
  return v;
}

}  // namespace

TEST(Confusion, AllOffensivePerfect) {
  const std::vector<Label> g(7, O);
  EXPECT_EQ(confusion_matrix(g, g), (ConfusionMatrix{7, 0, 0, 0}));
}

TEST(Confusion, Enumeration) {
  const std::vector<Label> g = {O, O, N, N}, p = {O, N, O, N};
  EXPECT_EQ(confusion_matrix(g, p), (ConfusionMatrix{1, 1, 1, 1}));
}

TEST(Confusion, MatchesPerIndexTally) {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    const auto g = random_labels(rng, n, 0.4), p = random_labels(rng, n, 0.5);
    const auto c = oracle::tally(as_ints(g), as_ints(p));
    EXPECT_EQ(confusion_matrix(g, p), (ConfusionMatrix{c.tp, c.fp, c.fn, c.tn}));
  }
}

TEST(Confusion, LengthMismatchAndEmptyRejected) {
  const std::vector<Label> a = {O}, b = {O, N};
  EXPECT_THROW(confusion_matrix(a, b), ArgumentError);
  EXPECT_THROW(confusion_matrix({}, {}), ArgumentError);
}

TEST(F1, HandEvaluatedFixture) {
  const ConfusionMatrix m{2, 1, 1, 6};
  EXPECT_NEAR(f1_binary_class(m, O), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(f1_binary_class(m, N), 6.0 / 7.0, 1e-12);
  EXPECT_NEAR(metrics_from_confusion(m).macro_f1, 0.7619, 1e-4);
  EXPECT_NEAR(metrics_from_confusion(m).macro_f1, (2.0 / 3.0 + 6.0 / 7.0) / 2.0, 1e-12);
}

TEST(F1, DegenerateClassScoresZero) {
  EXPECT_EQ(f1_binary_class(ConfusionMatrix{0, 0, 0, 10}, O), 0.0);
  EXPECT_EQ(f1_binary_class(ConfusionMatrix{0, 0, 0, 10}, N), 1.0);
}

TEST(MacroF1, PerfectIsOne) {
  const std::vector<Label> g = {O, N, N, O, N};
  EXPECT_EQ(macro_f1(g, g).macro_f1, 1.0);
}

TEST(MacroF1, MatchesBruteForceOracle) {
  Rng rng(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    const double skew = rng.uniform();
    const auto g = random_labels(rng, n, skew), p = random_labels(rng, n, rng.uniform());
    const auto r = macro_f1(g, p);
    EXPECT_NEAR(r.macro_f1, oracle::macro_f1(as_ints(g), as_ints(p)), 1e-9);
    EXPECT_EQ(r.n, n);
  }
}

TEST(MacroF1, CsvRows) {
  const LabeledReport rows[] = {{"syn_a", "syn_b", metrics_from_confusion({2, 1, 1, 6})}};
  const std::string csv = reports_to_csv(rows);
  EXPECT_NE(csv.find("syn_a,syn_b,0.761905,0.666667,0.857143,2,1,1,6,10"), std::string::npos)
      << csv;
}
