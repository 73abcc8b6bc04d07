#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>
#include <sstream>

#include "fixtures.hpp"
#include "floodsense/evaluate.hpp"

using namespace floodsense;
using namespace floodsense::evaluate;
using detect::CountyDeclaration;

namespace {

RegionRegistry abc() {
  const std::vector<std::string> names{"Avon", "Berkshire", "Cumbria", "Devon"};
  return RegionRegistry(names);
}

std::vector<CountyDeclaration> declared(std::initializer_list<std::string> flooded) {
  std::vector<CountyDeclaration> out;
  for (const char* n : {"Avon", "Berkshire", "Cumbria", "Devon"}) {
    out.push_back({n, std::find(flooded.begin(), flooded.end(), n) != flooded.end(), 0.0});
  }
  return out;
}

std::vector<EventRecord> truth(std::initializer_list<std::string> names) {
  std::vector<EventRecord> out;
  for (const auto& n : names) out.push_back({fixtures::day(2015, 10, 28), n, Severity::Minor});
  return out;
}

double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

}  // namespace

TEST(Evaluate, DayMetricsExamples) {
  const auto reg = abc();
  auto m = day_metrics(declared({"Avon", "Berkshire"}), truth({"Berkshire", "Cumbria"}), reg);
  EXPECT_EQ(m.tp, 1u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.fn, 1u);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  m = day_metrics(declared({"Cumbria"}), truth({"Cumbria"}), reg);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  m = day_metrics(declared({}), truth({"Cumbria"}), reg);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_TRUE(m.precision_undefined);
  EXPECT_FALSE(m.recall_undefined);
}

TEST(Evaluate, DayMetricsCountInvariants) {
  std::mt19937_64 rng(1);
  const auto reg = abc();
  const std::vector<std::string> all{"Avon", "Berkshire", "Cumbria", "Devon"};
  for (int t = 0; t < 200; ++t) {
    std::vector<CountyDeclaration> d;
    std::vector<EventRecord> tr;
    std::size_t nd = 0;
    for (const auto& n : all) {
      const bool f = rng() % 2;
      nd += f;
      d.push_back({n, f, 0});
      if (rng() % 2) tr.push_back({fixtures::day(2015, 1, 1), n, Severity::Severe});
    }
    const auto m = day_metrics(d, tr, reg);
    EXPECT_EQ(m.tp + m.fn, tr.size());
    EXPECT_EQ(m.tp + m.fp, nd);
  }
}

TEST(Evaluate, NamesAreNormalisedAndUnknownsListed) {
  auto reg = abc();
  reg.add_alias("Cumberland", "Cumbria");
  EXPECT_EQ(reg.resolve("  CUMBRIA. "), "Cumbria");
  EXPECT_EQ(reg.resolve("cumberland"), "Cumbria");
  EXPECT_FALSE(reg.resolve("Narnia"));
  const auto m = day_metrics(declared({"Cumbria"}), truth({"cumberland"}), reg);
  EXPECT_EQ(m.tp, 1u);
  try {
    day_metrics(declared({}), truth({"Narnia", "Gondor", "Devon"}), reg);
    FAIL();
  } catch (const EvaluateError& e) {
    const std::string w = e.what();
    EXPECT_NE(w.find("Narnia"), std::string::npos);
    EXPECT_NE(w.find("Gondor"), std::string::npos);
  }
  EXPECT_THROW(reg.add_alias("x", "Mordor"), EvaluateError);
  std::stringstream aliases("alias,canonical\n# comment\nBerks,Berkshire\nNorth Devon,Devon\n");
  reg.load_aliases(aliases);
  EXPECT_EQ(reg.resolve("berks"), "Berkshire");
  EXPECT_EQ(reg.resolve("North-Devon"), "Devon");
}

TEST(Evaluate, Severity) {
  EXPECT_EQ(parse_severity("minor"), Severity::Minor);
  EXPECT_EQ(parse_severity("Major"), Severity::Significant);
  EXPECT_EQ(parse_severity("significant"), Severity::Significant);
  EXPECT_EQ(parse_severity("3"), Severity::Severe);
  EXPECT_FALSE(parse_severity("catastrophic"));
  EXPECT_EQ(SeverityFactors{}.of(Severity::Severe), 3.0);
}

TEST(Evaluate, TruthParsing) {
  std::stringstream ok("date,county,severity\n2015-10-28,Cumbria,minor\n\n2015-10-29,\"Bristol, City of\",severe\n");
  const auto t = parse_truth(ok);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[1].county, "Bristol, City of");
  EXPECT_EQ(t[1].severity, Severity::Severe);
  std::stringstream bad("date,county,severity\n2015-10-28,Cumbria,minor\n2015-02-30,Devon,minor\n");
  try {
    parse_truth(bad);
    FAIL();
  } catch (const EvaluateError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::stringstream no_header("2015-10-28,Cumbria,minor\n");
  EXPECT_THROW(parse_truth(no_header), EvaluateError);
  EXPECT_THROW(load_truth("/nonexistent/truth.csv"), IoError);
}

TEST(Evaluate, FBetaExamples) {
  EXPECT_NEAR(f_beta(0.5, 0.5, 1), 0.5, 1e-15);
  EXPECT_NEAR(f_beta(0.5, 0.5, 2), 0.5, 1e-15);
  EXPECT_NEAR(f_beta(0.25, 1.0, 2), 0.625, 1e-12);
  EXPECT_EQ(f_beta(1, 0, 1), 0.0);
  EXPECT_EQ(f_beta(0, 0, 2), 0.0);
  EXPECT_THROW(f_beta(1.1, 0.5, 1), std::invalid_argument);
  EXPECT_THROW(f_beta(0.5, 0.5, 0), std::invalid_argument);
}

TEST(Evaluate, FBetaProperties) {
  for (int i = 1; i <= 20; ++i) {
    for (int j = 1; j <= 20; ++j) {
      const double p = i / 20.0, r = j / 20.0;
      EXPECT_NEAR(f_beta(p, r, 1), 2 * p * r / (p + r), 1e-12);
      if (i > 1) EXPECT_GE(f_beta(p, r, 2), f_beta((i - 1) / 20.0, r, 2));
      if (j > 1) EXPECT_GE(f_beta(p, r, 2), f_beta(p, (j - 1) / 20.0, 2));
    }
  }
  const double h = 1e-6;
  for (double beta : {1.5, 2.0, 3.0}) {
    for (double x : {0.2, 0.5, 0.8}) {
      const double dr = (f_beta(x, x + h, beta) - f_beta(x, x - h, beta)) / (2 * h);
      const double dp = (f_beta(x + h, x, beta) - f_beta(x - h, x, beta)) / (2 * h);
      EXPECT_GT(dr, dp);
    }
  }
}

TEST(Evaluate, ParamGridNormalize) {
  ParamGrid g;
  g.r = {2, 1, 2, 0};
  g.threshold = {0.5, 0.1};
  g.normalize();
  EXPECT_EQ(g.r, (std::vector<double>{0, 1, 2}));
  EXPECT_EQ(g.size(), 6u);
  g.alpha.clear();
  EXPECT_THROW(g.normalize(), EvaluateError);
  ParamGrid neg;
  neg.r = {-1};
  EXPECT_THROW(neg.normalize(), EvaluateError);
}

TEST(Evaluate, PearsonMatchesOracle) {
  const std::vector<double> x{3, 8, 1, 12}, y{2.5, 7, 2, 9.5};
  EXPECT_NEAR(pearson(x, y), oracle_pearson(x, y), 1e-12);
  EXPECT_NEAR(pearson(x, x), 1.0, 1e-15);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a, b;
    for (int i = 0; i < 20; ++i) {
      a.push_back(static_cast<double>(rng() % 1000));
      b.push_back(static_cast<double>(rng() % 1000) * 0.37);
    }
    EXPECT_NEAR(pearson(a, b), oracle_pearson(a, b), 1e-10);
  }
  const std::vector<double> flat{1, 1, 1, 1};
  EXPECT_THROW(pearson(x, flat), EvaluateError);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{2}), EvaluateError);
}

TEST(Evaluate, DailyCorrelation) {
  const auto reg = abc();
  const std::map<std::string, double> pop{{"Avon", 100}, {"Berkshire", 200}, {"Cumbria", 300}, {"Devon", 400}};
  std::vector<EventRecord> tr{{fixtures::day(2015, 1, 2), "Avon", Severity::Minor},
                              {fixtures::day(2015, 1, 2), "Devon", Severity::Severe},
                              {fixtures::day(2015, 1, 3), "Cumbria", Severity::Significant}};
  const auto scores = daily_event_scores(tr, pop, reg);
  EXPECT_EQ(scores.at(fixtures::day(2015, 1, 2)), 100 + 1200);
  EXPECT_EQ(scores.at(fixtures::day(2015, 1, 3)), 600);
  const std::map<Day, std::size_t> counts{
      {fixtures::day(2015, 1, 1), 5}, {fixtures::day(2015, 1, 2), 40}, {fixtures::day(2015, 1, 3), 20}};
  const auto c = daily_correlation(counts, tr, pop, reg);
  EXPECT_EQ(c.days, 3u);
  EXPECT_NEAR(c.r, oracle_pearson({5, 40, 20}, {0, 1300, 600}), 1e-12);
}

TEST(Evaluate, DailyCounts) {
  std::vector<Message> ms{fixtures::msg("1", "a"), fixtures::msg("2", "b")};
  ms[1].timestamp = fixtures::at(2015, 10, 29, 1);
  const auto c = daily_counts(ms);
  EXPECT_EQ(c.size(), 2u);
}

class PlantedSweep : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { scenario_ = new fixtures::PlantedScenario(fixtures::planted_scenario()); }
  static void TearDownTestSuite() { delete scenario_; }
  static fixtures::PlantedScenario* scenario_;
};
fixtures::PlantedScenario* PlantedSweep::scenario_ = nullptr;

TEST_F(PlantedSweep, RecoversPlantedEvents) {
  const auto& s = *scenario_;
  const auto res = sweep(s.days, *s.backend, s.setup, s.registry, fixtures::reference_grid());
  ASSERT_EQ(res.rows.size(), 128u);
  ASSERT_EQ(res.argmax.size(), 2u);
  for (std::size_t b = 0; b < 2; ++b) {
    const auto& row = res.rows[res.argmax[b]];
    EXPECT_EQ(row.avg_recall, 1.0);
    EXPECT_GE(row.avg_precision, 0.9);
    EXPECT_EQ(row.f[b], 1.0);
  }
  // Rows in r, alpha, T, mode order.
  for (std::size_t i = 1; i < res.rows.size(); ++i) {
    const auto& a = res.rows[i - 1];
    const auto& c = res.rows[i];
    EXPECT_TRUE(std::tie(a.r, a.alpha, a.threshold, a.mode) < std::tie(c.r, c.alpha, c.threshold, c.mode));
  }
  const auto csv = res.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "r,alpha,T,mode,avg_precision,avg_recall,F1,F2");
  EXPECT_NE(csv.find("\n2,0.35,0.25,relative,"), std::string::npos);
  EXPECT_NE(csv.find("\n1,0.15,0.1,relative,"), std::string::npos);
}

TEST_F(PlantedSweep, DayOrderDoesNotMatter) {
  const auto& s = *scenario_;
  ParamGrid g;
  g.r = {0.0, 1.0};
  g.alpha = {0.15};
  g.threshold = {0.1, 0.5};
  const auto a = sweep(s.days, *s.backend, s.setup, s.registry, g);
  auto rev = s.days;
  std::reverse(rev.begin(), rev.end());
  const auto b = sweep(rev, *s.backend, s.setup, s.registry, g);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.summary_json(), b.summary_json());
}

TEST_F(PlantedSweep, ThreadsDoNotMatter) {
  auto setup = scenario_->setup;
  setup.threads = 4;
  ParamGrid g;
  const auto a = sweep(scenario_->days, *scenario_->backend, scenario_->setup, scenario_->registry, g);
  const auto b = sweep(scenario_->days, *scenario_->backend, setup, scenario_->registry, g);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.rows.size(), 1u);
}

TEST_F(PlantedSweep, RequiresTruthAndParams) {
  auto days = scenario_->days;
  days[1].truth.clear();
  EXPECT_THROW(sweep(days, *scenario_->backend, scenario_->setup, scenario_->registry, ParamGrid{}), EvaluateError);
  ParamGrid empty;
  empty.threshold.clear();
  EXPECT_THROW(sweep(scenario_->days, *scenario_->backend, scenario_->setup, scenario_->registry, empty),
               EvaluateError);
  EXPECT_THROW(sweep({}, *scenario_->backend, scenario_->setup, scenario_->registry, ParamGrid{}), EvaluateError);
}
