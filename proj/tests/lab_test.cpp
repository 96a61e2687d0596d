#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "unipred/lab/experiments.hpp"

using namespace unipred;
using namespace unipred::lab;

namespace {

ExperimentConfig config_for(const std::string& name, std::vector<std::pair<std::string, std::string>> extra = {}) {
  extra.insert(extra.begin(), {"experiment", name});
  return make_config(extra);
}

}  // namespace

TEST(Config, ParsesKeyValueText) {
  const auto kv = parse_config_text("# comment\n\nexperiment = sunrise\n n=10 \nseed=3\n");
  ASSERT_EQ(kv.size(), 3U);
  const auto c = make_config(kv);
  EXPECT_EQ(c.experiment, "sunrise");
  EXPECT_EQ(*c.n, 10U);
  EXPECT_EQ(*c.seed, 3U);
  EXPECT_EQ(c.trajectories, 10000U);
  EXPECT_FALSE(c.theta.has_value());
}

TEST(Config, Rejections) {
  EXPECT_THROW(make_config({{"colour", "red"}}), ConfigInvalid);
  EXPECT_THROW(make_config({{"n", "ten"}}), ConfigInvalid);
  EXPECT_THROW(make_config({{"n", "-1"}}), ConfigInvalid);
  EXPECT_THROW(make_config({{"theta", "1"}}), ConfigInvalid);
  EXPECT_THROW(parse_config_text("seed 4"), ConfigInvalid);
  EXPECT_THROW(load_config("/nonexistent/cfg.txt"), IoError);
}

TEST(Config, OverridesWin) {
  const auto c = make_config({{"seed", "1"}, {"n", "5"}}, {{"seed", "9"}});
  EXPECT_EQ(*c.seed, 9U);
  EXPECT_EQ(*c.n, 5U);
}

TEST(Config, LoadsFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "unipred-lab-config.txt";
  {
    std::ofstream f(path);
    f << "experiment=bound-suite\nseed=4\nprior=grid\n";
  }
  const auto c = load_config(path, {{"n", "6"}});
  std::filesystem::remove(path);
  EXPECT_EQ(c.experiment, "bound-suite");
  EXPECT_EQ(c.prior, "grid");
  EXPECT_EQ(*c.n, 6U);
}

TEST(Config, MissingSeedIsRejected) {
  EXPECT_THROW(run_experiment(config_for("bound-suite")), ConfigInvalid);
  EXPECT_THROW(run_experiment(config_for("magic-numbers")), ConfigInvalid);
}

TEST(Csv, FormatsDoubles) {
  EXPECT_EQ(format_double(1.0), "1.0");
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(1e300), "1.0000000000000001e+300");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Csv, RoundTripWithQuoting) {
  ResultTable t;
  t.meta("note", "a=b");
  t.columns = {"name", "value", "count"};
  t.add_row({std::string("plain"), 0.1, std::int64_t{3}});
  t.add_row({std::string("comma, \"quoted\""), std::numeric_limits<double>::quiet_NaN(), std::int64_t{-7}});
  t.add_row({std::string("two\nlines"), 2.0, std::int64_t{0}});
  t.add_row({std::string("12"), 1.0 / 3.0, std::int64_t{1}});
  const auto text = to_csv(t);
  const auto back = from_csv(text);
  EXPECT_TRUE(back == t);
  EXPECT_EQ(to_csv(back), text);
  EXPECT_EQ(std::get<std::string>(back.rows[3][0]), "12");
  EXPECT_THROW(t.add_row({std::int64_t{1}}), DomainError);
}

TEST(Csv, EmptyTable) {
  ResultTable t;
  t.meta("k", "v");
  t.columns = {"a", "b"};
  const auto text = to_csv(t);
  EXPECT_EQ(text, "# k=v\na,b\n");
  EXPECT_TRUE(from_csv(text) == t);
}

TEST(Csv, FileErrors) {
  ResultTable t;
  t.columns = {"a"};
  EXPECT_THROW(emit_csv(t, "/nonexistent-dir/out.csv"), IoError);
  EXPECT_THROW(parse_csv("/nonexistent-dir/out.csv"), IoError);
  const auto path = std::filesystem::temp_directory_path() / "unipred-lab-table.csv";
  t.add_row({std::int64_t{5}});
  emit_csv(t, path);
  EXPECT_TRUE(parse_csv(path) == t);
  std::filesystem::remove(path);
}

TEST(Experiments, UnknownName) { EXPECT_THROW(run_experiment(config_for("no-such-thing")), UnknownExperiment); }

TEST(Experiments, CatalogComplete) {
  for (const char* name : {"sunrise", "raven-confirmation", "finite-population", "regrouping", "bound-suite",
                           "iid-instantaneous", "magic-numbers", "computable-convergence"})
    EXPECT_EQ(experiment_catalog().count(name), 1U) << name;
}

TEST(Experiments, SunriseDoom) {
  const auto r = run_experiment(config_for("sunrise"));
  EXPECT_TRUE(r.bounds_hold);
  const auto& t = r.table;
  const std::size_t last = t.rows.size() - 1;
  EXPECT_EQ(t.number(last, "n"), 1826213.0);
  EXPECT_NEAR(t.number(last, "doom") * 1826215.0, 1.0, 1e-12);
  EXPECT_NEAR(t.number(last, "next_one"), 1826214.0 / 1826215.0, 1e-15);
  EXPECT_EQ(t.meta_value("library"), "unipred 1.0.0");
  EXPECT_EQ(t.meta_value("config.experiment"), "sunrise");
}

TEST(Experiments, RavenColumns) {
  const auto r = run_experiment(config_for("raven-confirmation", {{"n", "20"}}));
  EXPECT_TRUE(r.bounds_hold);
  const auto& t = r.table;
  ASSERT_EQ(t.rows.size(), 21U);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(t.number(i, "uniform_H2"), 0.0);
    const double n = t.number(i, "n");
    EXPECT_NEAR(t.number(i, "uniform_next_zero"), 1.0 / (n + 2.0), 1e-12);
  }
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_GT(t.number(i, "dirac_H2"), t.number(i - 1, "dirac_H2"));
}

TEST(Experiments, BoundSuiteSelfHasZeroSlack) {
  const auto r = run_experiment(config_for("bound-suite", {{"seed", "1"}, {"prior", "self"}, {"n", "8"}}));
  EXPECT_TRUE(r.bounds_hold);
  const auto& t = r.table;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (const char* c : {"ratio_cum", "hellinger_cum", "divergence_cum", "gap_cum", "log_inv_w"})
      EXPECT_EQ(t.number(i, c), 0.0) << c;
}

TEST(Experiments, BoundSuiteGridHolds) {
  const auto r = run_experiment(config_for("bound-suite", {{"seed", "2"}, {"prior", "grid"}, {"loss", "abstain"}}));
  EXPECT_TRUE(r.bounds_hold) << r.failures.size();
  for (std::size_t i = 0; i < r.table.rows.size(); ++i)
    for (const auto& c : r.table.columns)
      if (c.rfind("slack_", 0) == 0) {
        EXPECT_GE(r.table.number(i, c), -1e-10) << c;
      }
  EXPECT_THROW(run_experiment(config_for("bound-suite", {{"seed", "2"}, {"prior", "grid"}, {"loss", "nope"}})),
               ConfigInvalid);
  EXPECT_THROW(run_experiment(config_for("bound-suite", {{"seed", "2"}, {"theta", "0.35"}})), MissingTrueEnv);
}

TEST(Experiments, DeterministicOutput) {
  for (const auto& [name, fn] : experiment_catalog()) {
    auto c = config_for(name, {{"seed", "11"}});
    if (name == "sunrise" || name == "finite-population") c.n = 2000;
    if (name == "iid-instantaneous") c.n = 200;
    const auto a = to_csv(run_experiment(c).table);
    const auto b = to_csv(run_experiment(c).table);
    EXPECT_EQ(a, b) << name;
    EXPECT_TRUE(from_csv(a) == run_experiment(c).table) << name;
  }
}

TEST(Experiments, MetadataEchoesConfig) {
  const auto r = run_experiment(config_for("regrouping"));
  EXPECT_EQ(r.table.meta_value("config.seed"), "unset");
  EXPECT_EQ(r.table.meta_value("config.L"), "20");
  EXPECT_EQ(r.table.meta_value("verdict.regroup_invariance"), r.bounds_hold ? "pass" : "fail");
}
