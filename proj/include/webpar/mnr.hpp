#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "webpar/labeling.hpp"

namespace webpar {

struct StandardizationParams {
  std::vector<double> mean;
  std::vector<double> stddev;  // population standard deviation

  bool operator==(const StandardizationParams&) const = default;
};

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct MnrHyperparams {
  double l2 = 1e-4;
  int max_iterations = 3000;
  double tolerance = 1e-6;  // on the gradient's Euclidean norm

  bool operator==(const MnrHyperparams&) const = default;
};

// Multinomial logit model. classes are sorted ascending; classes[0] is the
// reference class with implicit zero weights. weights has one row per
// non-reference class and features + 1 columns (the last is the intercept).
struct MnrModel {
  std::vector<std::string> features;
  StandardizationParams standardization;
  std::vector<ThreadLabel> classes;
  Matrix weights;
  MnrHyperparams hyperparams;
  bool converged = false;
  int iterations = 0;
  // Regularized mean log-likelihood after each accepted step (index 0 is the
  // zero-weight start).
  std::vector<double> objective_trace;

  bool operator==(const MnrModel&) const;
};

// Mean log-likelihood minus (l2 / 2) * ||non-intercept weights||^2.
// `x` rows are already standardized; `y` holds class indices into the model's classes.
double mnr_objective(const Matrix& weights, const Matrix& x, std::span<const std::size_t> y, double l2);
Matrix mnr_gradient(const Matrix& weights, const Matrix& x, std::span<const std::size_t> y, double l2);

// Per-class scores for one standardized row; the reference class scores 0.
std::vector<double> mnr_scores(const Matrix& weights, std::span<const double> x);

// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> scores);

// Index of the largest score; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

// Fits on already-standardized rows by gradient ascent with backtracking,
// starting from zero weights. The returned model carries identity
// standardization. Throws Error(degenerate_labels) with fewer than two
// distinct labels.
MnrModel mnr_fit(const Matrix& x, std::span<const ThreadLabel> y, const MnrHyperparams& hyper,
                 std::vector<std::string> feature_names = {});

// Raw-feature input: standardization is applied inside. Throws Error(input)
// on a dimension mismatch.
std::vector<double> mnr_predict_proba(const MnrModel& model, std::span<const double> raw_features);
ThreadLabel mnr_predict(const MnrModel& model, std::span<const double> raw_features);

// --- model file (JSON)
std::string model_to_json(const MnrModel& model);
MnrModel model_from_json(std::string_view text);
void save_model(const MnrModel& model, const std::filesystem::path& path);
MnrModel load_model(const std::filesystem::path& path);

}  // namespace webpar
