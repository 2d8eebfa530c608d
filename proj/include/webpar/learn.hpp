#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "webpar/dom.hpp"
#include "webpar/labeling.hpp"
#include "webpar/measurements.hpp"
#include "webpar/mnr.hpp"

namespace webpar {

struct FeatureMatrix {
  std::vector<std::string> column_names;
  std::vector<std::string> row_ids;
  Matrix values;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
  std::vector<double> column(std::size_t j) const;
  std::optional<std::size_t> column_index(std::string_view name) const;

  // Keeps the named columns, in the given order. Throws Error(input) on an unknown name.
  FeatureMatrix select_columns(std::span<const std::string> names) const;
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
};

FeatureMatrix to_matrix(std::span<const PageFeatures> features);

// --- features CSV
void write_features_csv(std::ostream& out, std::span<const PageFeatures> features);
std::vector<PageFeatures> parse_features_csv(std::string_view csv_text);

// Population mean / standard deviation per column.
StandardizationParams zscore_fit(const Matrix& x);
// (x - mean) / std; zero-variance columns map to 0.
Matrix zscore_apply(const Matrix& x, const StandardizationParams& params);

// Pearson product-moment correlation. Throws Error(undefined_correlation)
// when either side is constant and Error(input) on length mismatch or n < 2.
double pearson_r(std::span<const double> x, std::span<const double> y);

struct CorrelationReport {
  std::vector<std::string> features;
  std::vector<std::string> targets;
  // r[f][t]; NaN where the correlation is undefined (a constant column).
  std::vector<std::vector<double>> r;
};

CorrelationReport correlation_report(const FeatureMatrix& x, const std::vector<std::string>& target_names,
                                     const std::vector<std::vector<double>>& targets);

void write_correlations_csv(std::ostream& out, const CorrelationReport& report);

struct FeatureSelection {
  std::vector<std::string> names;
  std::optional<std::string> warning;
};

// Keeps features whose largest |R| across targets is strictly above threshold.
FeatureSelection select_features(const CorrelationReport& report, double threshold);

// Standardizes on x, then fits; the model standardizes raw input itself.
MnrModel train_model(const FeatureMatrix& x, std::span<const ThreadLabel> y, const MnrHyperparams& hyper);

struct CvFold {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  StandardizationParams standardization;
  double accuracy = 0.0;

  bool operator==(const CvFold&) const = default;
};

struct CvReport {
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  double max_accuracy = 0.0;
  bool stratified = true;
  std::vector<ThreadLabel> classes;
  // confusion[{true, predicted}] = count
  std::map<std::pair<ThreadLabel, ThreadLabel>, std::size_t> confusion;
  std::map<ThreadLabel, std::size_t> label_distribution;
  std::vector<CvFold> folds;

  bool operator==(const CvReport&) const = default;
};

// Fold assignment: per class, shuffled row indices, dealt round-robin over
// the k folds in class order. Falls back to one shuffled list when some class
// has fewer than k rows. Throws Error(configuration) when k < 2 or k > rows.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const ThreadLabel> y, std::size_t k,
                                                       std::uint64_t seed, bool* stratified = nullptr);

CvReport cross_validate(const FeatureMatrix& x, std::span<const ThreadLabel> y, std::size_t k, std::uint64_t seed,
                        const MnrHyperparams& hyper = {});

void write_cv_report_csv(std::ostream& out, const CvReport& report);

struct SavingsRow {
  std::string page_id;
  ThreadLabel ideal_label = 1;
  ThreadLabel model_label = 1;
  double default_ms = 0.0;
  double model_ms = 0.0;
  double ideal_ms = 0.0;
  double default_normalized = 1.0;
  double model_normalized = 1.0;
  double perf_savings_pct = 0.0;
  std::optional<double> energy_savings_pct;
};

// (default - model) / default * 100.
double savings_pct(double default_value, double model_value);

// Per page: ideal = fastest measured configuration, model = time at the
// predicted label, default = time at default_threads; times normalized to
// ideal. Throws Error(report) when a needed configuration was not measured.
std::vector<SavingsRow> savings_report(std::span<const AggregatedMeasurement> aggs,
                                       const std::map<std::string, ThreadLabel>& predicted,
                                       const std::map<std::string, ThreadLabel>& ideal, unsigned default_threads);

void write_savings_csv(std::ostream& out, std::span<const SavingsRow> rows);
void write_normalized_csv(std::ostream& out, std::span<const SavingsRow> rows);

}  // namespace webpar
