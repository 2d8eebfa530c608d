#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "webpar/error.hpp"
#include "webpar/learn.hpp"
#include "webpar/mnr.hpp"

using namespace webpar;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::usage;
}

Matrix column(std::vector<double> v) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

FeatureMatrix named(Matrix m) {
  FeatureMatrix f;
  f.values = std::move(m);
  for (std::size_t j = 0; j < f.cols(); ++j) f.column_names.push_back("f" + std::to_string(j));
  for (std::size_t i = 0; i < f.rows(); ++i) f.row_ids.push_back("r" + std::to_string(i));
  return f;
}

}  // namespace

TEST_CASE("z-score") {
  const auto p = zscore_fit(column({1, 2, 3}));
  CHECK(p.mean[0] == 2.0);
  CHECK(p.stddev[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
  const auto z = zscore_apply(column({1, 2, 3}), p);
  CHECK(z(0, 0) == doctest::Approx(-1.224744871391589));
  CHECK(z(1, 0) == 0.0);
  CHECK(z(2, 0) == doctest::Approx(1.224744871391589));

  const auto constant = zscore_apply(column({5, 5, 5}), zscore_fit(column({5, 5, 5})));
  for (std::size_t i = 0; i < 3; ++i) CHECK(constant(i, 0) == 0.0);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(50.0, 20.0);
  Matrix m(40, 4);
  for (auto& v : m.data()) v = n(rng);
  const auto zm = zscore_apply(m, zscore_fit(m));
  const auto again = zscore_fit(zm);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(std::fabs(again.mean[j]) < 1e-12);
    CHECK(again.stddev[j] == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(kind_of([] { zscore_fit(Matrix()); }) == ErrorKind::input);
}

TEST_CASE("pearson r") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y, neg;
  for (double v : x) {
    y.push_back(2 * v + 1);
    neg.push_back(-v);
  }
  CHECK(pearson_r(x, y) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson_r(x, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::fabs(pearson_r(std::vector<double>{-1, 0, 1}, std::vector<double>{1, -2, 1})) < 1e-12);
  CHECK(kind_of([] { pearson_r(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}); }) ==
        ErrorKind::undefined_correlation);
  CHECK(kind_of([] { pearson_r(std::vector<double>{1}, std::vector<double>{1}); }) == ErrorKind::input);
  CHECK(kind_of([] { pearson_r(std::vector<double>{1, 2}, std::vector<double>{1}); }) == ErrorKind::input);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> a(20), b(20), a2(20);
    for (std::size_t k = 0; k < 20; ++k) {
      a[k] = n(rng);
      b[k] = a[k] * 0.3 + n(rng);
      a2[k] = 3.5 * a[k] + 100.0;
    }
    const double r = pearson_r(a, b);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    CHECK(pearson_r(b, a) == doctest::Approx(r).epsilon(1e-12));
    CHECK(pearson_r(a2, b) == doctest::Approx(r).epsilon(1e-12));
  }
}

TEST_CASE("feature selection") {
  CorrelationReport r{{"dom_size", "tree_depth"}, {"p_2", "p_4"}, {{0.45, -0.2}, {0.05, -0.03}}};
  const auto s = select_features(r, 0.1);
  CHECK(s.names == std::vector<std::string>{"dom_size"});
  CHECK_FALSE(s.warning);
  CHECK(select_features(r, 0.0).names.size() == 2);
  const auto none = select_features(r, 0.9);
  CHECK(none.names.empty());
  CHECK(none.warning);

  r.r[0] = {std::nan(""), -0.5};
  CHECK(select_features(r, 0.1).names == std::vector<std::string>{"dom_size"});
}

TEST_CASE("correlation report marks constant columns") {
  Matrix m(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    m(i, 0) = static_cast<double>(i);
    m(i, 1) = 7.0;
  }
  const auto r = correlation_report(named(m), {"p_2"}, {{1, 2, 3, 5}});
  CHECK(r.r[0][0] > 0.9);
  CHECK(std::isnan(r.r[1][0]));
  std::ostringstream out;
  write_correlations_csv(out, r);
  CHECK(out.str().find("f1,p_2,\n") != std::string::npos);
}

TEST_CASE("softmax and argmax") {
  const auto p = softmax(std::vector<double>{0, 0, 0});
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0));
  const auto big = softmax(std::vector<double>{1000.0, 999.0, -1000.0});
  CHECK(big[0] + big[1] + big[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(big[0] > big[1]);
  CHECK(argmax(std::vector<double>{1, 3, 3}) == 1);
}

TEST_CASE("mnr: separable toy set") {
  const auto x = column({-1, 1});
  const std::vector<ThreadLabel> y{1, 4};
  const auto m = mnr_fit(x, y, {});
  CHECK(m.classes == std::vector<ThreadLabel>{1, 4});
  CHECK(mnr_predict(m, std::vector<double>{-1}) == 1);
  CHECK(mnr_predict(m, std::vector<double>{1}) == 4);
  for (std::size_t i = 1; i < m.objective_trace.size(); ++i) {
    CHECK(m.objective_trace[i] >= m.objective_trace[i - 1]);
  }
  CHECK(kind_of([] { mnr_fit(column({1, 2}), std::vector<ThreadLabel>{2, 2}, {}); }) == ErrorKind::degenerate_labels);
  CHECK(kind_of([&] { mnr_predict(m, std::vector<double>{1, 2}); }) == ErrorKind::input);
}

TEST_CASE("mnr: zero weights predict uniformly and shifts keep the argmax") {
  MnrModel m;
  m.classes = {1, 2, 4};
  m.features = {"a"};
  m.standardization = {{0.0}, {1.0}};
  m.weights = Matrix(2, 2);
  const auto p = mnr_predict_proba(m, std::vector<double>{3.0});
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0));
  CHECK(mnr_predict(m, std::vector<double>{3.0}) == 1);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> s{n(rng), n(rng), n(rng), n(rng)};
    auto shifted = s;
    const double c = n(rng) * 100.0;
    for (auto& v : shifted) v += c;
    CHECK(argmax(softmax(s)) == argmax(softmax(shifted)));
  }
}

TEST_CASE("mnr: model file round trip") {
  Matrix x(6, 2);
  const double v[] = {0, 1, 1, 0, 2, 2, 3, 1, 4, 4, 5, 3};
  std::copy(std::begin(v), std::end(v), x.data().begin());
  const auto m = train_model(named(x), std::vector<ThreadLabel>{1, 1, 2, 2, 4, 4}, {});
  const auto text = model_to_json(m);
  const auto back = model_from_json(text);
  CHECK(back == m);
  CHECK(model_to_json(back) == text);
  CHECK(kind_of([] { model_from_json("{}"); }) == ErrorKind::input);
  CHECK(kind_of([] { model_from_json("not json"); }) == ErrorKind::input);
  CHECK(kind_of([&] {
          auto t = text;
          t.replace(t.find("\"version\": 1"), 12, "\"version\": 9");
          model_from_json(t);
        }) == ErrorKind::input);
}

TEST_CASE("stratified folds") {
  std::vector<ThreadLabel> y;
  for (int i = 0; i < 535; ++i) y.push_back(i % 10 < 6 ? 1 : (i % 10 < 7 ? 2 : 4));
  bool stratified = false;
  const auto folds = stratified_folds(y, 10, 42, &stratified);
  CHECK(stratified);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    CHECK((f.size() == 53 || f.size() == 54));
    for (auto i : f) CHECK(seen.insert(i).second);
    std::map<ThreadLabel, int> counts;
    for (auto i : f) ++counts[y[i]];
    CHECK(counts.size() == 3);
  }
  CHECK(seen.size() == 535);
  CHECK(stratified_folds(y, 10, 42) == folds);
  CHECK(stratified_folds(y, 10, 43) != folds);

  std::vector<ThreadLabel> rare(20, 1);
  rare[3] = 2;
  stratified_folds(rare, 5, 1, &stratified);
  CHECK_FALSE(stratified);
  CHECK(kind_of([] { stratified_folds(std::vector<ThreadLabel>{1, 2}, 3, 0); }) == ErrorKind::configuration);
  CHECK(kind_of([] { stratified_folds(std::vector<ThreadLabel>{1, 2}, 1, 0); }) == ErrorKind::configuration);
}

TEST_CASE("cross-validation report bookkeeping") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  Matrix x(60, 2);
  std::vector<ThreadLabel> y;
  for (std::size_t i = 0; i < 60; ++i) {
    x(i, 0) = n(rng);
    x(i, 1) = n(rng);
    y.push_back(x(i, 0) + 0.3 * n(rng) > 0 ? 4 : 1);
  }
  const auto r = cross_validate(named(x), y, 5, 7);
  CHECK(r.fold_accuracies.size() == 5);
  double sum = 0.0;
  for (double a : r.fold_accuracies) sum += a;
  CHECK(r.mean_accuracy == doctest::Approx(sum / 5));
  std::size_t total = 0;
  for (const auto& [key, c] : r.confusion) total += c;
  CHECK(total == 60);
  CHECK(r.label_distribution.at(1) + r.label_distribution.at(4) == 60);
  CHECK(r.mean_accuracy > 0.7);
  CHECK(cross_validate(named(x), y, 5, 7) == r);
  std::ostringstream out;
  write_cv_report_csv(out, r);
  CHECK(out.str().rfind("section,key,value\nfold_accuracy,0,", 0) == 0);
}

TEST_CASE("savings") {
  CHECK(savings_pct(45.41, 2.48) == doctest::Approx(94.5386).epsilon(1e-5));
  CHECK(savings_pct(158.14, 84.88) == doctest::Approx(46.3260).epsilon(1e-5));
  CHECK(kind_of([] { savings_pct(0.0, 1.0); }) == ErrorKind::report);

  auto agg = [](std::string p, unsigned t, double ms) {
    AggregatedMeasurement a;
    a.page_id = std::move(p);
    a.threads = t;
    a.median_style_ms = ms;
    a.median_energy_j = ms * 2;
    return a;
  };
  const std::vector<AggregatedMeasurement> aggs{agg("a", 1, 2.48), agg("a", 2, 10.0), agg("a", 4, 45.41),
                                                agg("b", 1, 9.0),  agg("b", 2, 4.0),  agg("b", 4, 6.0)};
  const auto rows = savings_report(aggs, {{"a", 1}, {"b", 4}}, {{"a", 1}, {"b", 2}}, 4);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].model_normalized == 1.0);
  CHECK(rows[0].perf_savings_pct == doctest::Approx(94.5386).epsilon(1e-5));
  CHECK(*rows[0].energy_savings_pct == doctest::Approx(94.5386).epsilon(1e-5));
  CHECK(rows[1].ideal_ms == 4.0);
  CHECK(rows[1].model_normalized == 1.5);
  CHECK(rows[1].perf_savings_pct == 0.0);
  CHECK(kind_of([&] { savings_report(aggs, {{"a", 8}}, {}, 4); }) == ErrorKind::report);
  std::ostringstream out;
  write_savings_csv(out, rows);
  CHECK(out.str().rfind(
            "page_id,ideal_label,model_label,default_ms,model_ms,ideal_ms,perf_savings_pct,energy_savings_pct\n", 0) ==
        0);
}

TEST_CASE("features CSV round trip") {
  PageFeatures f;
  f.page_id = "five";
  f.dom_size = 5;
  f.tree_depth = 3;
  f.number_of_leaves = 3;
  f.avg_tree_width = 5.0 / 3.0;
  f.max_tree_width = 3;
  f.max_avg_width_ratio = 9.0 / 5.0;
  f.avg_work_per_level = 5.0 / 3.0;
  f.web_page_size = 47;
  std::ostringstream out;
  write_features_csv(out, std::vector{f});
  CHECK(out.str() ==
        "page_id,dom_size,attribute_count,web_page_size,tree_depth,number_of_leaves,avg_tree_width,"
        "max_tree_width,max_avg_width_ratio,avg_work_per_level\n"
        "five,5,0,47,3,3,1.6666666666666667,3,1.8,1.6666666666666667\n");
  CHECK(parse_features_csv(out.str()).front() == f);

  const auto m = to_matrix(std::vector{f});
  CHECK(m.column_names.size() == 9);
  const std::vector<std::string> keep{"tree_depth", "dom_size"};
  const auto s = m.select_columns(keep);
  CHECK(s.values(0, 0) == 3.0);
  CHECK(s.values(0, 1) == 5.0);
  CHECK(kind_of([&] {
          const std::vector<std::string> bad{"nope"};
          m.select_columns(bad);
        }) == ErrorKind::input);
}
