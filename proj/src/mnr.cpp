#include "webpar/mnr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "webpar/error.hpp"

namespace webpar {

namespace {

constexpr int kModelFormatVersion = 1;

// Class index per label, classes ascending.
std::vector<std::size_t> encode(std::span<const ThreadLabel> y, const std::vector<ThreadLabel>& classes) {
  std::vector<std::size_t> out;
  out.reserve(y.size());
  for (auto label : y) {
    out.push_back(static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), label) - classes.begin()));
  }
  return out;
}

double log_sum_exp(std::span<const double> s) {
  const double m = *std::max_element(s.begin(), s.end());
  double acc = 0.0;
  for (double v : s) acc += std::exp(v - m);
  return m + std::log(acc);
}

double norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

}  // namespace

bool MnrModel::operator==(const MnrModel& o) const {
  return features == o.features && standardization == o.standardization && classes == o.classes &&
         weights == o.weights && hyperparams == o.hyperparams && converged == o.converged &&
         iterations == o.iterations;
}

std::vector<double> mnr_scores(const Matrix& weights, std::span<const double> x) {
  const std::size_t d = x.size();
  std::vector<double> s(weights.rows() + 1, 0.0);
  for (std::size_t k = 0; k < weights.rows(); ++k) {
    const auto w = weights.row(k);
    double acc = w[d];
    for (std::size_t j = 0; j < d; ++j) acc += w[j] * x[j];
    s[k + 1] = acc;
  }
  return s;
}

std::vector<double> softmax(std::span<const double> scores) {
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    p[k] = std::exp(scores[k] - m);
    total += p[k];
  }
  for (auto& v : p) v /= total;
  return p;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

double mnr_objective(const Matrix& weights, const Matrix& x, std::span<const std::size_t> y, double l2) {
  double ll = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto s = mnr_scores(weights, x.row(i));
    ll += s[y[i]] - log_sum_exp(s);
  }
  ll /= static_cast<double>(x.rows());
  double penalty = 0.0;
  for (std::size_t k = 0; k < weights.rows(); ++k) {
    for (std::size_t j = 0; j + 1 < weights.cols(); ++j) penalty += weights(k, j) * weights(k, j);
  }
  return ll - 0.5 * l2 * penalty;
}

Matrix mnr_gradient(const Matrix& weights, const Matrix& x, std::span<const std::size_t> y, double l2) {
  const std::size_t d = x.cols();
  Matrix g(weights.rows(), weights.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto p = softmax(mnr_scores(weights, x.row(i)));
    const auto xi = x.row(i);
    for (std::size_t k = 0; k < weights.rows(); ++k) {
      const double r = (y[i] == k + 1 ? 1.0 : 0.0) - p[k + 1];
      auto gk = g.row(k);
      for (std::size_t j = 0; j < d; ++j) gk[j] += r * xi[j];
      gk[d] += r;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  for (std::size_t k = 0; k < g.rows(); ++k) {
    for (std::size_t j = 0; j < g.cols(); ++j) {
      g(k, j) *= inv_n;
      if (j < d) g(k, j) -= l2 * weights(k, j);
    }
  }
  return g;
}

MnrModel mnr_fit(const Matrix& x, std::span<const ThreadLabel> y, const MnrHyperparams& hyper,
                 std::vector<std::string> feature_names) {
  if (x.rows() != y.size()) throw Error(ErrorKind::input, "feature rows and labels differ in length");
  if (x.rows() == 0) throw Error(ErrorKind::input, "cannot fit on an empty dataset");
  if (!feature_names.empty() && feature_names.size() != x.cols()) {
    throw Error(ErrorKind::input, "feature name count does not match feature columns");
  }
  if (hyper.l2 < 0.0) throw Error(ErrorKind::configuration, "l2 strength must be >= 0");

  const std::set<ThreadLabel> distinct(y.begin(), y.end());
  if (distinct.size() < 2) {
    throw Error(ErrorKind::degenerate_labels, "training needs at least two distinct labels");
  }

  MnrModel model;
  model.features = std::move(feature_names);
  model.classes.assign(distinct.begin(), distinct.end());
  model.hyperparams = hyper;
  model.standardization.mean.assign(x.cols(), 0.0);
  model.standardization.stddev.assign(x.cols(), 1.0);
  model.weights = Matrix(model.classes.size() - 1, x.cols() + 1);

  const auto yi = encode(y, model.classes);
  double objective = mnr_objective(model.weights, x, yi, hyper.l2);
  model.objective_trace.push_back(objective);

  constexpr double kArmijo = 1e-4;
  double step = 1.0;
  for (int it = 0; it < hyper.max_iterations; ++it) {
    const Matrix grad = mnr_gradient(model.weights, x, yi, hyper.l2);
    const double gnorm = norm(grad.data());
    if (gnorm < hyper.tolerance) {
      model.converged = true;
      break;
    }
    // Backtracking from a step slightly larger than the last accepted one.
    step *= 2.0;
    Matrix trial = model.weights;
    double trial_objective = 0.0;
    bool accepted = false;
    while (step > 1e-12) {
      for (std::size_t i = 0; i < trial.data().size(); ++i) {
        trial.data()[i] = model.weights.data()[i] + step * grad.data()[i];
      }
      trial_objective = mnr_objective(trial, x, yi, hyper.l2);
      if (trial_objective >= objective + kArmijo * step * gnorm * gnorm) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no ascent direction left at machine precision
    model.weights = std::move(trial);
    objective = trial_objective;
    model.objective_trace.push_back(objective);
    model.iterations = it + 1;
  }
  return model;
}

std::vector<double> mnr_predict_proba(const MnrModel& model, std::span<const double> raw) {
  const auto d = model.standardization.mean.size();
  if (raw.size() != d || model.weights.cols() != d + 1) {
    throw Error(ErrorKind::input, "expected " + std::to_string(d) + " features, got " + std::to_string(raw.size()));
  }
  std::vector<double> z(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = model.standardization.stddev[j];
    z[j] = sd > 0.0 ? (raw[j] - model.standardization.mean[j]) / sd : 0.0;
  }
  return softmax(mnr_scores(model.weights, z));
}

ThreadLabel mnr_predict(const MnrModel& model, std::span<const double> raw) {
  // classes ascend, so the first maximum is the smallest thread count.
  return model.classes[argmax(mnr_predict_proba(model, raw))];
}

std::string model_to_json(const MnrModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "webpar-mnr";
  j["version"] = kModelFormatVersion;
  j["classes"] = model.classes;
  j["features"] = model.features;
  j["standardization"] = {{"mean", model.standardization.mean}, {"std", model.standardization.stddev}};
  auto weights = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < model.weights.rows(); ++k) {
    const auto row = model.weights.row(k);
    weights.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["weights"] = std::move(weights);
  j["hyperparams"] = {{"l2", model.hyperparams.l2},
                      {"max_iterations", model.hyperparams.max_iterations},
                      {"tolerance", model.hyperparams.tolerance}};
  j["converged"] = model.converged;
  j["iterations"] = model.iterations;
  return j.dump(2) + "\n";
}

MnrModel model_from_json(std::string_view text) {
  MnrModel model;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "webpar-mnr") throw Error(ErrorKind::input, "not a webpar model file");
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorKind::input, "unsupported model version " + j.at("version").dump());
    }
    model.classes = j.at("classes").get<std::vector<ThreadLabel>>();
    model.features = j.at("features").get<std::vector<std::string>>();
    model.standardization.mean = j.at("standardization").at("mean").get<std::vector<double>>();
    model.standardization.stddev = j.at("standardization").at("std").get<std::vector<double>>();
    const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
    const std::size_t d = model.standardization.mean.size();
    if (model.classes.size() < 2 || rows.size() != model.classes.size() - 1 ||
        model.standardization.stddev.size() != d || model.features.size() != d) {
      throw Error(ErrorKind::input, "model file dimensions are inconsistent");
    }
    model.weights = Matrix(rows.size(), d + 1);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != d + 1) throw Error(ErrorKind::input, "model weight row has the wrong width");
      std::copy(rows[k].begin(), rows[k].end(), model.weights.row(k).begin());
    }
    const auto& h = j.at("hyperparams");
    model.hyperparams.l2 = h.at("l2").get<double>();
    model.hyperparams.max_iterations = h.at("max_iterations").get<int>();
    model.hyperparams.tolerance = h.at("tolerance").get<double>();
    model.converged = j.at("converged").get<bool>();
    model.iterations = j.at("iterations").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::input, std::string("malformed model file: ") + e.what());
  }
  return model;
}

void save_model(const MnrModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << model_to_json(model);
}

MnrModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace webpar
