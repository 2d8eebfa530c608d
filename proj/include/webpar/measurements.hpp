#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "webpar/traversal.hpp"

namespace webpar {

// One (page, threads, trial) key. A measurements CSV stores styling and
// layout as separate rows; ingestion merges them into one record.
struct TrialMeasurement {
  std::string page_id;
  unsigned threads = 1;
  unsigned trial_index = 0;
  std::optional<double> style_ms;
  std::optional<double> layout_ms;
  std::optional<double> energy_j;
};

struct AggregatedMeasurement {
  std::string page_id;
  unsigned threads = 1;
  double median_style_ms = 0.0;
  double mad_style_ms = 0.0;
  std::optional<double> median_layout_ms;
  std::optional<double> median_energy_j;
};

// threads -> ratio against the serial baseline; the baseline entry is exactly 1.
struct RatioSet {
  std::string page_id;
  std::map<unsigned, double> by_threads;
};
using SpeedupSet = RatioSet;
using GreenupSet = RatioSet;

// --- measurements CSV: page_id,pass_kind,threads,trial,elapsed_ms,energy_j

void write_measurements_header(std::ostream& out);
void write_measurement_row(std::ostream& out, const TrialResult& result, std::optional<double> energy_j);

// Required columns: page_id, threads, trial, elapsed_ms. Optional: pass_kind
// (default styling) and energy_j (blank allowed). Unknown columns are ignored.
// Per-trial energy is the sum over the key's pass rows.
// Throws Error(schema | value | duplicate).
std::vector<TrialMeasurement> parse_measurements(std::string_view csv_text);
std::vector<TrialMeasurement> ingest_csv(const std::filesystem::path& path);

// --- energy CSV: page_id,threads,energy_j
using EnergyTable = std::map<std::pair<std::string, unsigned>, double>;
EnergyTable parse_energy_csv(std::string_view csv_text);
EnergyTable ingest_energy_csv(const std::filesystem::path& path);

// One aggregate per (page, threads), ordered by page id then threads.
// Medians and MAD over trials; energy from `energy` overrides per-trial
// energy when the key is present. Throws Error(aggregation) if any group
// lacks a style time.
std::vector<AggregatedMeasurement> aggregate(std::span<const TrialMeasurement> trials,
                                             const EnergyTable& energy = {});

// Groups aggregates by page id (order preserved).
std::map<std::string, std::vector<AggregatedMeasurement>> by_page(std::span<const AggregatedMeasurement> aggs);

// p_t = x_1 / x_t on median style times. Throws Error(baseline) without a
// threads=1 aggregate and Error(degenerate_measurement) on zero times.
SpeedupSet speedups(std::span<const AggregatedMeasurement> page_aggs);
// e_t = y_1 / y_t on median energies; additionally Error(value) when energy is absent.
GreenupSet greenups(std::span<const AggregatedMeasurement> page_aggs);

// Median of the per-page MADs for each thread count.
std::map<unsigned, double> mad_summary(std::span<const AggregatedMeasurement> aggs);

void write_aggregates_csv(std::ostream& out, std::span<const AggregatedMeasurement> aggs);
std::vector<AggregatedMeasurement> parse_aggregates(std::string_view csv_text);

// page_id,threads,p_t,e_t (e_t blank when energy is unavailable).
void write_ratios_csv(std::ostream& out, std::span<const SpeedupSet> speedups,
                      std::span<const std::optional<GreenupSet>> greenups);

}  // namespace webpar
