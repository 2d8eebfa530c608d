#pragma once

#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "webpar/config.hpp"
#include "webpar/measurements.hpp"

namespace webpar {

// Nominal thread-count class.
using ThreadLabel = unsigned;
inline constexpr ThreadLabel kSerialLabel = 1;

enum class CostModel { perf, energy, perf_energy };

std::string_view to_string(CostModel model);
CostModel parse_cost_model(std::string_view text);

// Performance-energy tuple for one parallel configuration.
struct PET {
  unsigned threads = 2;
  double speedup = 1.0;
  double greenup = 1.0;
};

// Speedup buckets (P_j, P_{j+1}] with a greenup floor E_j per bucket.
struct PetBucketConfig {
  double p_min = 1.1;
  std::vector<double> boundaries{1.1, 1.3, std::numeric_limits<double>::infinity()};
  std::vector<double> energy_limits{0.9, 0.85};

  std::size_t bucket_count() const { return energy_limits.size(); }

  // Throws Error(configuration) unless p_min > 1, boundaries strictly
  // ascend from p_min, and there is one energy limit per bucket.
  void validate() const;

  // Reads p_min, boundaries and energy_limits, defaulting each missing key.
  static PetBucketConfig from(const KeyValueConfig& config);
};

// Thread count of the largest ratio if it strictly exceeds `threshold`,
// otherwise serial. Equal maxima resolve to the smallest thread count.
ThreadLabel threshold_label(const RatioSet& ratios, double threshold);

inline ThreadLabel performance_label(const SpeedupSet& speedups, double p_min) {
  return threshold_label(speedups, p_min);
}
inline ThreadLabel energy_label(const GreenupSet& greenups, double e_min) {
  return threshold_label(greenups, e_min);
}

// Drops PETs with speedup <= p_min, buckets the rest (speedups above the top
// boundary clamp into the top bucket), then scans buckets from the highest
// down and, inside a bucket, PETs by descending speedup (ties: fewer
// threads first). The first PET whose greenup exceeds its bucket's limit
// wins and ends the scan; if none does, the label is serial.
ThreadLabel performance_energy_label(std::span<const PET> pets, const PetBucketConfig& config);

// Bucket index (0-based) of a speedup already known to exceed p_min.
std::size_t bucket_of(double speedup, const PetBucketConfig& config);

// Builds PETs for every non-serial thread count present in both sets.
std::vector<PET> make_pets(const SpeedupSet& speedups, const GreenupSet& greenups);

struct LabelingOptions {
  CostModel model = CostModel::perf_energy;
  PetBucketConfig buckets;
  double e_min = 1.1;
};

struct PageLabel {
  std::string page_id;
  ThreadLabel label = kSerialLabel;
  CostModel model = CostModel::perf_energy;
};

// Labels every page in the aggregate set.
std::vector<PageLabel> label_pages(std::span<const AggregatedMeasurement> aggs, const LabelingOptions& options);

void write_labels_csv(std::ostream& out, std::span<const PageLabel> labels);
std::vector<PageLabel> parse_labels(std::string_view csv_text);

}  // namespace webpar
