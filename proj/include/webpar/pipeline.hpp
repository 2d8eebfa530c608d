#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "webpar/config.hpp"
#include "webpar/labeling.hpp"
#include "webpar/learn.hpp"
#include "webpar/mnr.hpp"
#include "webpar/synthetic.hpp"
#include "webpar/traversal.hpp"

namespace webpar {

// Shape ranges for the synthetic page corpus; each page draws its node count,
// fan-out and depth bias from these.
struct CorpusSpec {
  std::size_t pages = 50;
  std::uint64_t min_nodes = 50;
  std::uint64_t max_nodes = 3000;
  std::uint32_t max_children = 12;
};

struct PipelineConfig {
  std::filesystem::path output_dir = ".";
  WorkConfig work;
  PowerModel power;
  PetBucketConfig buckets;
  CostModel cost_model = CostModel::perf_energy;
  double e_min = 1.1;
  std::size_t cv_folds = 10;
  std::uint64_t seed = 0;
  MnrHyperparams hyper;
  double feature_threshold = 0.1;
  std::optional<unsigned> default_threads;  // max thread count when unset
  CorpusSpec corpus;

  // Unknown keys are rejected with Error(configuration).
  static PipelineConfig from(const KeyValueConfig& config);
  void validate() const;
  unsigned default_thread_count() const;
};

// One synthetic page tree per corpus slot, page ids `synth_NNN`.
std::vector<std::pair<std::string, DomTree>> synthetic_corpus(const CorpusSpec& spec, std::uint64_t seed);

// Sorted *.html / *.htm files directly inside dir; page id is the file stem.
std::vector<std::filesystem::path> list_pages(const std::filesystem::path& dir);

// Each command writes its artifacts into config.output_dir (created when
// missing) and a short summary to `log`.

void cmd_generate(const PipelineConfig& config, std::ostream& log);

// features.csv, width_profile.csv, feature_errors.csv
void cmd_features(const std::filesystem::path& pages_dir, const PipelineConfig& config, std::ostream& log);

// measurements.csv; pages come from pages_dir, or from the synthetic corpus when empty.
void cmd_bench(const std::optional<std::filesystem::path>& pages_dir, const PipelineConfig& config,
               std::ostream& log);

// aggregates.csv, ratios.csv, labels.csv
void cmd_label(const std::filesystem::path& measurements, const std::optional<std::filesystem::path>& energy,
               const PipelineConfig& config, std::ostream& log);

// correlations.csv (when ratios are given), model.json, cv_report.csv
void cmd_train(const std::filesystem::path& features, const std::filesystem::path& labels,
               const std::optional<std::filesystem::path>& ratios, const PipelineConfig& config, std::ostream& log);

struct Prediction {
  std::string page_id;
  ThreadLabel label = kSerialLabel;
  std::vector<double> probabilities;  // aligned with the model's classes
};

// Predicts from an HTML page, or from every row of a features CSV.
std::vector<Prediction> predict_file(const MnrModel& model, const std::filesystem::path& input);
void write_predictions_csv(std::ostream& out, const MnrModel& model, std::span<const Prediction> predictions);

// predictions.csv
void cmd_predict(const std::filesystem::path& model, const std::filesystem::path& input,
                 const PipelineConfig& config, std::ostream& log);

// savings.csv, normalized.csv
void cmd_report(const std::filesystem::path& measurements, const std::filesystem::path& labels,
                const std::filesystem::path& model, const std::filesystem::path& features,
                const PipelineConfig& config, std::ostream& log);

}  // namespace webpar
