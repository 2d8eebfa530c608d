#include "webpar/measurements.hpp"

#include <cmath>
#include <ostream>
#include <set>
#include <tuple>

#include "webpar/csv.hpp"
#include "webpar/error.hpp"
#include "webpar/stats.hpp"

namespace webpar {

namespace {

std::string row_context(std::size_t row) { return "row " + std::to_string(row + 2); }

unsigned parse_threads(std::string_view text, std::size_t row) {
  const auto v = csv::parse_int(text, "threads");
  if (v <= 0) throw Error(ErrorKind::value, row_context(row) + ": threads must be positive");
  return static_cast<unsigned>(v);
}

double parse_non_negative(std::string_view text, std::string_view what, std::size_t row) {
  const double v = csv::parse_double(text, what);
  if (!(v >= 0.0) || std::isinf(v)) {
    throw Error(ErrorKind::value, row_context(row) + ": " + std::string(what) + " must be a finite value >= 0");
  }
  return v;
}

}  // namespace

void write_measurements_header(std::ostream& out) {
  out << "page_id,pass_kind,threads,trial,elapsed_ms,energy_j\n";
}

void write_measurement_row(std::ostream& out, const TrialResult& r, std::optional<double> energy_j) {
  csv::Writer w(out);
  w.field(r.page_id).field(to_string(r.pass_kind)).field(r.threads).field(r.trial_index).field(r.elapsed_ms);
  if (energy_j) {
    w.field(*energy_j);
  } else {
    w.empty();
  }
  w.end_row();
}

namespace {

std::vector<TrialMeasurement> measurements_from(const csv::Table& table) {
  const auto page_col = table.require_column("page_id");
  const auto threads_col = table.require_column("threads");
  const auto trial_col = table.require_column("trial");
  const auto elapsed_col = table.require_column("elapsed_ms");
  const auto kind_col = table.column("pass_kind");
  const auto energy_col = table.column("energy_j");

  std::vector<TrialMeasurement> records;
  std::map<std::tuple<std::string, unsigned, unsigned>, std::size_t> index;
  std::set<std::tuple<std::string, PassKind, unsigned, unsigned>> seen;

  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    const auto& page = row[page_col];
    if (page.empty()) throw Error(ErrorKind::value, row_context(r) + ": empty page_id");
    const unsigned threads = parse_threads(row[threads_col], r);
    const auto trial = csv::parse_int(row[trial_col], "trial");
    if (trial < 0) throw Error(ErrorKind::value, row_context(r) + ": trial must be >= 0");
    const double elapsed = parse_non_negative(row[elapsed_col], "elapsed_ms", r);
    const PassKind kind = kind_col && !row[*kind_col].empty() ? parse_pass_kind(row[*kind_col]) : PassKind::styling;
    std::optional<double> energy;
    if (energy_col && !row[*energy_col].empty()) energy = parse_non_negative(row[*energy_col], "energy_j", r);

    const auto trial_index = static_cast<unsigned>(trial);
    if (!seen.emplace(page, kind, threads, trial_index).second) {
      throw Error(ErrorKind::duplicate, row_context(r) + ": duplicate measurement for page '" + page +
                                            "', " + std::string(to_string(kind)) + ", threads " +
                                            std::to_string(threads) + ", trial " + std::to_string(trial));
    }

    auto key = std::make_tuple(page, threads, trial_index);
    auto [it, inserted] = index.emplace(key, records.size());
    if (inserted) records.push_back(TrialMeasurement{page, threads, trial_index, {}, {}, {}});
    auto& rec = records[it->second];
    (kind == PassKind::styling ? rec.style_ms : rec.layout_ms) = elapsed;
    if (energy) rec.energy_j = rec.energy_j.value_or(0.0) + *energy;
  }
  return records;
}

}  // namespace

std::vector<TrialMeasurement> parse_measurements(std::string_view csv_text) {
  return measurements_from(csv::Table::parse(csv_text));
}

std::vector<TrialMeasurement> ingest_csv(const std::filesystem::path& path) {
  return measurements_from(csv::Table::read(path));
}

namespace {

EnergyTable energy_from(const csv::Table& table) {
  const auto page_col = table.require_column("page_id");
  const auto threads_col = table.require_column("threads");
  const auto energy_col = table.require_column("energy_j");
  EnergyTable out;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    const unsigned threads = parse_threads(row[threads_col], r);
    const double energy = parse_non_negative(row[energy_col], "energy_j", r);
    if (!out.emplace(std::make_pair(row[page_col], threads), energy).second) {
      throw Error(ErrorKind::duplicate, row_context(r) + ": duplicate energy entry for page '" + row[page_col] +
                                            "', threads " + std::to_string(threads));
    }
  }
  return out;
}

}  // namespace

EnergyTable parse_energy_csv(std::string_view csv_text) { return energy_from(csv::Table::parse(csv_text)); }

EnergyTable ingest_energy_csv(const std::filesystem::path& path) { return energy_from(csv::Table::read(path)); }

std::vector<AggregatedMeasurement> aggregate(std::span<const TrialMeasurement> trials, const EnergyTable& energy) {
  struct Group {
    std::vector<double> style, layout, energy;
  };
  std::map<std::pair<std::string, unsigned>, Group> groups;
  for (const auto& t : trials) {
    auto& g = groups[{t.page_id, t.threads}];
    if (t.style_ms) g.style.push_back(*t.style_ms);
    if (t.layout_ms) g.layout.push_back(*t.layout_ms);
    if (t.energy_j) g.energy.push_back(*t.energy_j);
  }

  std::vector<AggregatedMeasurement> out;
  out.reserve(groups.size());
  for (const auto& [key, g] : groups) {
    if (g.style.empty()) {
      throw Error(ErrorKind::aggregation, "no styling trials for page '" + key.first + "', threads " +
                                              std::to_string(key.second));
    }
    AggregatedMeasurement a;
    a.page_id = key.first;
    a.threads = key.second;
    a.median_style_ms = stats::median(g.style);
    a.mad_style_ms = stats::mad(g.style);
    if (!g.layout.empty()) a.median_layout_ms = stats::median(g.layout);
    if (auto it = energy.find(key); it != energy.end()) {
      a.median_energy_j = it->second;
    } else if (!g.energy.empty()) {
      a.median_energy_j = stats::median(g.energy);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::map<std::string, std::vector<AggregatedMeasurement>> by_page(std::span<const AggregatedMeasurement> aggs) {
  std::map<std::string, std::vector<AggregatedMeasurement>> out;
  for (const auto& a : aggs) out[a.page_id].push_back(a);
  return out;
}

namespace {

template <class Value>
RatioSet ratios(std::span<const AggregatedMeasurement> page_aggs, Value value, std::string_view what) {
  if (page_aggs.empty()) throw Error(ErrorKind::baseline, "no aggregates given");
  RatioSet out;
  out.page_id = page_aggs.front().page_id;
  const AggregatedMeasurement* serial = nullptr;
  for (const auto& a : page_aggs) {
    if (a.page_id != out.page_id) throw Error(ErrorKind::input, "aggregates span more than one page");
    if (a.threads == 1) serial = &a;
  }
  if (!serial) throw Error(ErrorKind::baseline, "page '" + out.page_id + "' has no serial (threads=1) baseline");
  const double base = value(*serial);
  if (!(base > 0.0)) {
    throw Error(ErrorKind::degenerate_measurement,
                "page '" + out.page_id + "' has a zero serial " + std::string(what));
  }
  for (const auto& a : page_aggs) {
    if (a.threads == 1) {
      out.by_threads[1] = 1.0;
      continue;
    }
    const double x = value(a);
    if (!(x > 0.0)) {
      throw Error(ErrorKind::degenerate_measurement, "page '" + out.page_id + "' has a zero " + std::string(what) +
                                                         " at " + std::to_string(a.threads) + " threads");
    }
    out.by_threads[a.threads] = base / x;
  }
  return out;
}

}  // namespace

SpeedupSet speedups(std::span<const AggregatedMeasurement> page_aggs) {
  return ratios(page_aggs, [](const AggregatedMeasurement& a) { return a.median_style_ms; }, "style time");
}

GreenupSet greenups(std::span<const AggregatedMeasurement> page_aggs) {
  return ratios(
      page_aggs,
      [](const AggregatedMeasurement& a) {
        if (!a.median_energy_j) {
          throw Error(ErrorKind::value, "page '" + a.page_id + "' has no energy at " +
                                            std::to_string(a.threads) + " threads");
        }
        return *a.median_energy_j;
      },
      "energy");
}

std::map<unsigned, double> mad_summary(std::span<const AggregatedMeasurement> aggs) {
  std::map<unsigned, std::vector<double>> per_threads;
  for (const auto& a : aggs) per_threads[a.threads].push_back(a.mad_style_ms);
  std::map<unsigned, double> out;
  for (const auto& [t, mads] : per_threads) out[t] = stats::median(mads);
  return out;
}

void write_aggregates_csv(std::ostream& out, std::span<const AggregatedMeasurement> aggs) {
  out << "page_id,threads,median_style_ms,mad_style_ms,median_layout_ms,median_energy_j\n";
  csv::Writer w(out);
  for (const auto& a : aggs) {
    w.field(a.page_id).field(a.threads).field(a.median_style_ms).field(a.mad_style_ms);
    a.median_layout_ms ? w.field(*a.median_layout_ms) : w.empty();
    a.median_energy_j ? w.field(*a.median_energy_j) : w.empty();
    w.end_row();
  }
}

std::vector<AggregatedMeasurement> parse_aggregates(std::string_view csv_text) {
  const auto table = csv::Table::parse(csv_text);
  const auto page_col = table.require_column("page_id");
  const auto threads_col = table.require_column("threads");
  const auto style_col = table.require_column("median_style_ms");
  const auto mad_col = table.column("mad_style_ms");
  const auto layout_col = table.column("median_layout_ms");
  const auto energy_col = table.column("median_energy_j");
  std::vector<AggregatedMeasurement> out;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    AggregatedMeasurement a;
    a.page_id = row[page_col];
    a.threads = parse_threads(row[threads_col], r);
    a.median_style_ms = parse_non_negative(row[style_col], "median_style_ms", r);
    if (mad_col && !row[*mad_col].empty()) a.mad_style_ms = parse_non_negative(row[*mad_col], "mad_style_ms", r);
    if (layout_col && !row[*layout_col].empty()) {
      a.median_layout_ms = parse_non_negative(row[*layout_col], "median_layout_ms", r);
    }
    if (energy_col && !row[*energy_col].empty()) {
      a.median_energy_j = parse_non_negative(row[*energy_col], "median_energy_j", r);
    }
    out.push_back(std::move(a));
  }
  return out;
}

void write_ratios_csv(std::ostream& out, std::span<const SpeedupSet> speedup_sets,
                      std::span<const std::optional<GreenupSet>> greenup_sets) {
  out << "page_id,threads,p_t,e_t\n";
  csv::Writer w(out);
  for (std::size_t i = 0; i < speedup_sets.size(); ++i) {
    const auto& s = speedup_sets[i];
    const auto* g = i < greenup_sets.size() && greenup_sets[i] ? &*greenup_sets[i] : nullptr;
    for (const auto& [t, p] : s.by_threads) {
      w.field(s.page_id).field(t).field(p);
      if (g && g->by_threads.contains(t)) {
        w.field(g->by_threads.at(t));
      } else {
        w.empty();
      }
      w.end_row();
    }
  }
}

}  // namespace webpar
