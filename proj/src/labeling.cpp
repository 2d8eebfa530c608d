#include "webpar/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "webpar/csv.hpp"
#include "webpar/error.hpp"

namespace webpar {

std::string_view to_string(CostModel model) {
  switch (model) {
    case CostModel::perf: return "perf";
    case CostModel::energy: return "energy";
    case CostModel::perf_energy: return "perf_energy";
  }
  return "perf_energy";
}

CostModel parse_cost_model(std::string_view text) {
  if (text == "perf") return CostModel::perf;
  if (text == "energy") return CostModel::energy;
  if (text == "perf_energy") return CostModel::perf_energy;
  throw Error(ErrorKind::configuration, "unknown cost model '" + std::string(text) + "'");
}

void PetBucketConfig::validate() const {
  if (!(p_min > 1.0)) throw Error(ErrorKind::configuration, "p_min must exceed 1");
  if (boundaries.size() < 2) throw Error(ErrorKind::configuration, "need at least two bucket boundaries");
  if (boundaries.front() != p_min) {
    throw Error(ErrorKind::configuration, "the first bucket boundary must equal p_min");
  }
  for (std::size_t i = 1; i < boundaries.size(); ++i) {
    if (!(boundaries[i] > boundaries[i - 1])) {
      throw Error(ErrorKind::configuration, "bucket boundaries must be strictly ascending");
    }
  }
  if (energy_limits.size() != boundaries.size() - 1) {
    throw Error(ErrorKind::configuration, "need exactly one energy limit per bucket");
  }
  for (double e : energy_limits) {
    if (std::isnan(e)) throw Error(ErrorKind::configuration, "energy limits must be numbers");
  }
}

PetBucketConfig PetBucketConfig::from(const KeyValueConfig& config) {
  PetBucketConfig out;
  out.p_min = config.get_double("p_min", out.p_min);
  if (config.contains("boundaries")) {
    out.boundaries = config.get_doubles("boundaries", {});
  } else {
    out.boundaries.front() = out.p_min;
  }
  out.energy_limits = config.get_doubles("energy_limits", out.energy_limits);
  out.validate();
  return out;
}

ThreadLabel threshold_label(const RatioSet& ratios, double threshold) {
  if (ratios.by_threads.empty()) throw Error(ErrorKind::input, "labeling needs at least one ratio");
  // Ascending thread order, strict comparison: the first maximum is kept.
  auto best = ratios.by_threads.begin();
  for (auto it = ratios.by_threads.begin(); it != ratios.by_threads.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->second > threshold ? best->first : kSerialLabel;
}

std::size_t bucket_of(double speedup, const PetBucketConfig& config) {
  const auto& b = config.boundaries;
  // First boundary >= speedup closes the bucket (P_j, P_{j+1}].
  auto upper = std::lower_bound(b.begin() + 1, b.end(), speedup);
  if (upper == b.end()) return config.bucket_count() - 1;
  return static_cast<std::size_t>(upper - b.begin()) - 1;
}

ThreadLabel performance_energy_label(std::span<const PET> pets, const PetBucketConfig& config) {
  config.validate();
  std::vector<std::vector<PET>> buckets(config.bucket_count());
  for (const auto& pet : pets) {
    if (pet.speedup > config.p_min) buckets[bucket_of(pet.speedup, config)].push_back(pet);
  }
  for (std::size_t j = buckets.size(); j-- > 0;) {
    auto& bucket = buckets[j];
    std::sort(bucket.begin(), bucket.end(), [](const PET& a, const PET& b) {
      return a.speedup != b.speedup ? a.speedup > b.speedup : a.threads < b.threads;
    });
    for (const auto& pet : bucket) {
      if (pet.greenup > config.energy_limits[j]) return pet.threads;
    }
  }
  return kSerialLabel;
}

std::vector<PET> make_pets(const SpeedupSet& speedups, const GreenupSet& greenups) {
  std::vector<PET> out;
  for (const auto& [t, p] : speedups.by_threads) {
    if (t == kSerialLabel) continue;
    auto it = greenups.by_threads.find(t);
    if (it == greenups.by_threads.end()) {
      throw Error(ErrorKind::input, "page '" + speedups.page_id + "' has no greenup for " + std::to_string(t) +
                                        " threads");
    }
    out.push_back(PET{t, p, it->second});
  }
  return out;
}

std::vector<PageLabel> label_pages(std::span<const AggregatedMeasurement> aggs, const LabelingOptions& options) {
  std::vector<PageLabel> out;
  for (const auto& [page, page_aggs] : by_page(aggs)) {
    ThreadLabel label = kSerialLabel;
    switch (options.model) {
      case CostModel::perf:
        label = performance_label(speedups(page_aggs), options.buckets.p_min);
        break;
      case CostModel::energy:
        label = energy_label(greenups(page_aggs), options.e_min);
        break;
      case CostModel::perf_energy: {
        const auto pets = make_pets(speedups(page_aggs), greenups(page_aggs));
        label = performance_energy_label(pets, options.buckets);
        break;
      }
    }
    out.push_back(PageLabel{page, label, options.model});
  }
  return out;
}

void write_labels_csv(std::ostream& out, std::span<const PageLabel> labels) {
  out << "page_id,label,cost_model\n";
  csv::Writer w(out);
  for (const auto& l : labels) {
    w.field(l.page_id).field(l.label).field(to_string(l.model));
    w.end_row();
  }
}

std::vector<PageLabel> parse_labels(std::string_view csv_text) {
  const auto table = csv::Table::parse(csv_text);
  const auto page_col = table.require_column("page_id");
  const auto label_col = table.require_column("label");
  const auto model_col = table.column("cost_model");
  std::vector<PageLabel> out;
  for (const auto& row : table.rows()) {
    const auto label = csv::parse_int(row[label_col], "label");
    if (label <= 0) throw Error(ErrorKind::value, "labels must be positive thread counts");
    PageLabel l;
    l.page_id = row[page_col];
    l.label = static_cast<ThreadLabel>(label);
    l.model = model_col && !row[*model_col].empty() ? parse_cost_model(row[*model_col]) : CostModel::perf_energy;
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace webpar
