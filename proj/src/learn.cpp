#include "webpar/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "webpar/csv.hpp"
#include "webpar/error.hpp"

namespace webpar {

// ---------------------------------------------------------------------------
// FeatureMatrix

std::vector<double> FeatureMatrix::column(std::size_t j) const {
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) out[i] = values(i, j);
  return out;
}

std::optional<std::size_t> FeatureMatrix::column_index(std::string_view name) const {
  for (std::size_t j = 0; j < column_names.size(); ++j) {
    if (column_names[j] == name) return j;
  }
  return std::nullopt;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  for (const auto& name : names) {
    auto j = column_index(name);
    if (!j) throw Error(ErrorKind::input, "unknown feature '" + name + "'");
    idx.push_back(*j);
  }
  FeatureMatrix out;
  out.column_names.assign(names.begin(), names.end());
  out.row_ids = row_ids;
  out.values = Matrix(rows(), idx.size());
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t c = 0; c < idx.size(); ++c) out.values(i, c) = values(i, idx[c]);
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.column_names = column_names;
  out.values = Matrix(indices.size(), cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (!row_ids.empty()) out.row_ids.push_back(row_ids[indices[r]]);
    std::copy_n(values.row(indices[r]).begin(), cols(), out.values.row(r).begin());
  }
  return out;
}

FeatureMatrix to_matrix(std::span<const PageFeatures> features) {
  FeatureMatrix out;
  out.column_names.assign(kFeatureNames.begin(), kFeatureNames.end());
  out.values = Matrix(features.size(), kFeatureCount);
  for (std::size_t i = 0; i < features.size(); ++i) {
    out.row_ids.push_back(features[i].page_id);
    const auto v = feature_vector(features[i]);
    std::copy(v.begin(), v.end(), out.values.row(i).begin());
  }
  return out;
}

void write_features_csv(std::ostream& out, std::span<const PageFeatures> features) {
  out << "page_id";
  for (auto name : kFeatureNames) out << ',' << name;
  out << '\n';
  csv::Writer w(out);
  for (const auto& f : features) {
    w.field(f.page_id)
        .field(static_cast<unsigned long long>(f.dom_size))
        .field(static_cast<unsigned long long>(f.attribute_count))
        .field(static_cast<unsigned long long>(f.web_page_size))
        .field(static_cast<unsigned long long>(f.tree_depth))
        .field(static_cast<unsigned long long>(f.number_of_leaves))
        .field(f.avg_tree_width)
        .field(static_cast<unsigned long long>(f.max_tree_width))
        .field(f.max_avg_width_ratio)
        .field(f.avg_work_per_level);
    w.end_row();
  }
}

std::vector<PageFeatures> parse_features_csv(std::string_view csv_text) {
  const auto table = csv::Table::parse(csv_text);
  const auto page_col = table.require_column("page_id");
  std::array<std::size_t, kFeatureCount> cols{};
  for (std::size_t j = 0; j < kFeatureCount; ++j) cols[j] = table.require_column(kFeatureNames[j]);

  auto count = [](const std::string& text, std::string_view what) {
    const auto v = csv::parse_int(text, what);
    if (v < 0) throw Error(ErrorKind::value, std::string(what) + " must be >= 0");
    return static_cast<std::uint64_t>(v);
  };
  std::vector<PageFeatures> out;
  for (const auto& row : table.rows()) {
    PageFeatures f;
    f.page_id = row[page_col];
    f.dom_size = count(row[cols[0]], kFeatureNames[0]);
    f.attribute_count = count(row[cols[1]], kFeatureNames[1]);
    f.web_page_size = count(row[cols[2]], kFeatureNames[2]);
    f.tree_depth = static_cast<std::uint32_t>(count(row[cols[3]], kFeatureNames[3]));
    f.number_of_leaves = count(row[cols[4]], kFeatureNames[4]);
    f.avg_tree_width = csv::parse_double(row[cols[5]], kFeatureNames[5]);
    f.max_tree_width = count(row[cols[6]], kFeatureNames[6]);
    f.max_avg_width_ratio = csv::parse_double(row[cols[7]], kFeatureNames[7]);
    f.avg_work_per_level = csv::parse_double(row[cols[8]], kFeatureNames[8]);
    out.push_back(std::move(f));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Standardization and correlation

StandardizationParams zscore_fit(const Matrix& x) {
  if (x.rows() == 0) throw Error(ErrorKind::input, "cannot standardize an empty matrix");
  StandardizationParams p;
  p.mean.assign(x.cols(), 0.0);
  p.stddev.assign(x.cols(), 0.0);
  const double n = static_cast<double>(x.rows());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) m += x(i, j);
    m /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) ss += (x(i, j) - m) * (x(i, j) - m);
    p.mean[j] = m;
    p.stddev[j] = std::sqrt(ss / n);
  }
  return p;
}

Matrix zscore_apply(const Matrix& x, const StandardizationParams& params) {
  if (params.mean.size() != x.cols() || params.stddev.size() != x.cols()) {
    throw Error(ErrorKind::input, "standardization parameters do not match the matrix width");
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double sd = params.stddev[j];
      out(i, j) = sd > 0.0 ? (x(i, j) - params.mean[j]) / sd : 0.0;
    }
  }
  return out;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::input, "pearson_r: columns differ in length");
  if (x.size() < 2) throw Error(ErrorKind::input, "pearson_r: need at least two observations");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorKind::undefined_correlation, "pearson_r: correlation with a constant column is undefined");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport correlation_report(const FeatureMatrix& x, const std::vector<std::string>& target_names,
                                     const std::vector<std::vector<double>>& targets) {
  if (target_names.size() != targets.size()) throw Error(ErrorKind::input, "target names and columns differ");
  CorrelationReport report;
  report.features = x.column_names;
  report.targets = target_names;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const auto col = x.column(j);
    std::vector<double> row;
    for (const auto& t : targets) {
      try {
        row.push_back(pearson_r(col, t));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::undefined_correlation) throw;
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    report.r.push_back(std::move(row));
  }
  return report;
}

void write_correlations_csv(std::ostream& out, const CorrelationReport& report) {
  out << "feature,target,r\n";
  csv::Writer w(out);
  for (std::size_t f = 0; f < report.features.size(); ++f) {
    for (std::size_t t = 0; t < report.targets.size(); ++t) {
      w.field(report.features[f]).field(report.targets[t]);
      std::isnan(report.r[f][t]) ? w.empty() : w.field(report.r[f][t]);
      w.end_row();
    }
  }
}

FeatureSelection select_features(const CorrelationReport& report, double threshold) {
  FeatureSelection out;
  for (std::size_t f = 0; f < report.features.size(); ++f) {
    double best = 0.0;
    for (double r : report.r[f]) {
      if (!std::isnan(r)) best = std::max(best, std::fabs(r));
    }
    if (best > threshold) out.names.push_back(report.features[f]);
  }
  if (out.names.empty()) {
    out.warning = "no feature has |R| above " + csv::format_double(threshold) + "; the model will use intercepts only";
  }
  return out;
}

MnrModel train_model(const FeatureMatrix& x, std::span<const ThreadLabel> y, const MnrHyperparams& hyper) {
  const auto params = zscore_fit(x.values);
  auto model = mnr_fit(zscore_apply(x.values, params), y, hyper, x.column_names);
  model.standardization = params;
  return model;
}

// ---------------------------------------------------------------------------
// Cross-validation

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const ThreadLabel> y, std::size_t k,
                                                       std::uint64_t seed, bool* stratified) {
  if (k < 2) throw Error(ErrorKind::configuration, "cross-validation needs k >= 2");
  if (k > y.size()) {
    throw Error(ErrorKind::configuration, "k = " + std::to_string(k) + " exceeds the dataset size " +
                                              std::to_string(y.size()));
  }
  std::map<ThreadLabel, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  const bool strat = std::all_of(by_class.begin(), by_class.end(),
                                 [k](const auto& entry) { return entry.second.size() >= k; });
  if (stratified) *stratified = strat;

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order;
  if (strat) {
    for (auto& [label, rows] : by_class) {
      std::shuffle(rows.begin(), rows.end(), rng);
      order.insert(order.end(), rows.begin(), rows.end());
    }
  } else {
    order.resize(y.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
  }

  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t pos = 0; pos < order.size(); ++pos) folds[pos % k].push_back(order[pos]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CvReport cross_validate(const FeatureMatrix& x, std::span<const ThreadLabel> y, std::size_t k, std::uint64_t seed,
                        const MnrHyperparams& hyper) {
  if (x.rows() != y.size()) throw Error(ErrorKind::input, "feature rows and labels differ in length");
  CvReport report;
  const auto folds = stratified_folds(y, k, seed, &report.stratified);
  const std::set<ThreadLabel> classes(y.begin(), y.end());
  report.classes.assign(classes.begin(), classes.end());
  for (auto label : y) ++report.label_distribution[label];

  for (std::size_t f = 0; f < k; ++f) {
    CvFold fold;
    fold.test_rows = folds[f];
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) fold.train_rows.insert(fold.train_rows.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(fold.train_rows.begin(), fold.train_rows.end());

    const auto train_x = x.select_rows(fold.train_rows);
    std::vector<ThreadLabel> train_y;
    for (auto i : fold.train_rows) train_y.push_back(y[i]);

    const std::set<ThreadLabel> train_classes(train_y.begin(), train_y.end());
    std::optional<MnrModel> model;
    if (train_classes.size() >= 2) {
      model = train_model(train_x, train_y, hyper);
      fold.standardization = model->standardization;
    } else {
      // A single-class training fold can only predict that class.
      fold.standardization = zscore_fit(train_x.values);
    }

    std::size_t correct = 0;
    for (auto i : fold.test_rows) {
      const ThreadLabel predicted = model ? mnr_predict(*model, x.values.row(i)) : *train_classes.begin();
      if (predicted == y[i]) ++correct;
      ++report.confusion[{y[i], predicted}];
    }
    fold.accuracy = static_cast<double>(correct) / static_cast<double>(fold.test_rows.size());
    report.fold_accuracies.push_back(fold.accuracy);
    report.folds.push_back(std::move(fold));
  }
  report.mean_accuracy = std::accumulate(report.fold_accuracies.begin(), report.fold_accuracies.end(), 0.0) /
                         static_cast<double>(k);
  report.max_accuracy = *std::max_element(report.fold_accuracies.begin(), report.fold_accuracies.end());
  return report;
}

void write_cv_report_csv(std::ostream& out, const CvReport& report) {
  out << "section,key,value\n";
  csv::Writer w(out);
  for (std::size_t f = 0; f < report.fold_accuracies.size(); ++f) {
    w.field("fold_accuracy").field(std::to_string(f)).field(report.fold_accuracies[f]);
    w.end_row();
  }
  w.field("summary").field("mean_accuracy").field(report.mean_accuracy);
  w.end_row();
  w.field("summary").field("max_accuracy").field(report.max_accuracy);
  w.end_row();
  w.field("summary").field("stratified").field(report.stratified ? "true" : "false");
  w.end_row();
  for (const auto& [label, count] : report.label_distribution) {
    w.field("label_count").field(std::to_string(label)).field(count);
    w.end_row();
  }
  for (const auto& [key, count] : report.confusion) {
    w.field("confusion").field(std::to_string(key.first) + "->" + std::to_string(key.second)).field(count);
    w.end_row();
  }
}

// ---------------------------------------------------------------------------
// Savings

double savings_pct(double default_value, double model_value) {
  if (!(default_value > 0.0)) throw Error(ErrorKind::report, "savings need a positive default measurement");
  return (default_value - model_value) / default_value * 100.0;
}

std::vector<SavingsRow> savings_report(std::span<const AggregatedMeasurement> aggs,
                                       const std::map<std::string, ThreadLabel>& predicted,
                                       const std::map<std::string, ThreadLabel>& ideal, unsigned default_threads) {
  std::vector<SavingsRow> rows;
  for (const auto& [page, page_aggs] : by_page(aggs)) {
    auto pred = predicted.find(page);
    if (pred == predicted.end()) continue;  // no prediction, no row

    auto at = [&](unsigned threads) -> const AggregatedMeasurement& {
      for (const auto& a : page_aggs) {
        if (a.threads == threads) return a;
      }
      throw Error(ErrorKind::report, "page '" + page + "' has no measurement at " + std::to_string(threads) +
                                         " threads");
    };

    SavingsRow row;
    row.page_id = page;
    row.model_label = pred->second;
    const auto& best = *std::min_element(page_aggs.begin(), page_aggs.end(), [](const auto& a, const auto& b) {
      return a.median_style_ms < b.median_style_ms;
    });
    auto ideal_it = ideal.find(page);
    row.ideal_label = ideal_it != ideal.end() ? ideal_it->second : best.threads;
    row.ideal_ms = best.median_style_ms;

    const auto& def = at(default_threads);
    const auto& mod = at(row.model_label);
    row.default_ms = def.median_style_ms;
    row.model_ms = mod.median_style_ms;
    if (row.ideal_ms > 0.0) {
      row.default_normalized = row.default_ms / row.ideal_ms;
      row.model_normalized = row.model_ms / row.ideal_ms;
    }
    row.perf_savings_pct = savings_pct(row.default_ms, row.model_ms);
    if (def.median_energy_j && mod.median_energy_j && *def.median_energy_j > 0.0) {
      row.energy_savings_pct = savings_pct(*def.median_energy_j, *mod.median_energy_j);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_savings_csv(std::ostream& out, std::span<const SavingsRow> rows) {
  out << "page_id,ideal_label,model_label,default_ms,model_ms,ideal_ms,perf_savings_pct,energy_savings_pct\n";
  csv::Writer w(out);
  for (const auto& r : rows) {
    w.field(r.page_id).field(r.ideal_label).field(r.model_label).field(r.default_ms).field(r.model_ms);
    w.field(r.ideal_ms).field(r.perf_savings_pct);
    r.energy_savings_pct ? w.field(*r.energy_savings_pct) : w.empty();
    w.end_row();
  }
}

void write_normalized_csv(std::ostream& out, std::span<const SavingsRow> rows) {
  out << "page_id,default_normalized,model_normalized,ideal_normalized\n";
  csv::Writer w(out);
  for (const auto& r : rows) {
    w.field(r.page_id).field(r.default_normalized).field(r.model_normalized).field(1.0);
    w.end_row();
  }
}

}  // namespace webpar
