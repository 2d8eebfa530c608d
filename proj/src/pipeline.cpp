#include "webpar/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "webpar/csv.hpp"
#include "webpar/error.hpp"
#include "webpar/measurements.hpp"

namespace webpar {

namespace fs = std::filesystem;

namespace {

const std::set<std::string, std::less<>> kKnownKeys = {
    "thread_counts",  "trials",          "per_node_work_units", "timing",         "ns_per_work_unit",
    "thread_start_ns", "task_ns",        "idle_power_w",        "core_power_w",   "cost_model",
    "p_min",          "boundaries",      "energy_limits",       "e_min",          "cv_folds",
    "seed",           "l2",              "max_iterations",      "tolerance",      "feature_threshold",
    "default_threads", "corpus_pages",   "corpus_min_nodes",    "corpus_max_nodes", "corpus_max_children",
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Writes to a string first so a failing command leaves no half-written file.
template <class Fn>
void write_artifact(const fs::path& path, Fn&& fill) {
  std::ostringstream buffer;
  fill(buffer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << buffer.str();
  if (!out.flush()) throw Error(ErrorKind::io, "write failed for " + path.string());
}

fs::path prepare_output(const PipelineConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + config.output_dir.string() + ": " + ec.message());
  return config.output_dir;
}

void require_file(const fs::path& path, std::string_view what) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorKind::usage, std::string(what) + " '" + path.string() + "' does not exist");
  }
}

std::uint64_t positive(long long v, std::string_view key) {
  if (v <= 0) throw Error(ErrorKind::configuration, std::string(key) + " must be positive");
  return static_cast<std::uint64_t>(v);
}

std::vector<double> feature_row(const MnrModel& model, const PageFeatures& f) {
  const auto all = feature_vector(f);
  std::vector<double> row;
  for (const auto& name : model.features) {
    auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), name);
    if (it == kFeatureNames.end()) throw Error(ErrorKind::input, "model uses unknown feature '" + name + "'");
    row.push_back(all[static_cast<std::size_t>(it - kFeatureNames.begin())]);
  }
  return row;
}

Prediction predict_features(const MnrModel& model, const PageFeatures& f) {
  Prediction p;
  p.page_id = f.page_id;
  const auto row = feature_row(model, f);
  p.probabilities = mnr_predict_proba(model, row);
  p.label = mnr_predict(model, row);
  return p;
}

// Ratio targets keyed by page: "p_2" -> value, ...
std::map<std::string, std::map<std::string, double>> parse_ratio_targets(std::string_view text) {
  const auto table = csv::Table::parse(text);
  const auto page_col = table.require_column("page_id");
  const auto threads_col = table.require_column("threads");
  const auto p_col = table.require_column("p_t");
  const auto e_col = table.column("e_t");
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& row : table.rows()) {
    const auto t = csv::parse_int(row[threads_col], "threads");
    if (t == 1) continue;
    auto& targets = out[row[page_col]];
    targets["p_" + std::to_string(t)] = csv::parse_double(row[p_col], "p_t");
    if (e_col && !row[*e_col].empty()) targets["e_" + std::to_string(t)] = csv::parse_double(row[*e_col], "e_t");
  }
  return out;
}

}  // namespace

PipelineConfig PipelineConfig::from(const KeyValueConfig& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (!kKnownKeys.contains(key)) throw Error(ErrorKind::configuration, "unknown config key '" + key + "'");
  }
  PipelineConfig c;
  c.work.thread_counts = kv.get_unsigneds("thread_counts", c.work.thread_counts);
  c.work.trials_per_config = static_cast<unsigned>(positive(kv.get_int("trials", c.work.trials_per_config), "trials"));
  c.work.per_node_work_units = static_cast<std::uint32_t>(
      positive(kv.get_int("per_node_work_units", c.work.per_node_work_units), "per_node_work_units"));
  c.work.timing = parse_timing_mode(kv.get_string("timing", std::string(to_string(c.work.timing))));
  c.work.modeled.ns_per_work_unit = kv.get_double("ns_per_work_unit", c.work.modeled.ns_per_work_unit);
  c.work.modeled.thread_start_ns = kv.get_double("thread_start_ns", c.work.modeled.thread_start_ns);
  c.work.modeled.task_ns = kv.get_double("task_ns", c.work.modeled.task_ns);
  c.power.idle_power_w = kv.get_double("idle_power_w", c.power.idle_power_w);
  c.power.per_core_active_power_w = kv.get_double("core_power_w", c.power.per_core_active_power_w);
  c.cost_model = parse_cost_model(kv.get_string("cost_model", std::string(to_string(c.cost_model))));
  c.buckets = PetBucketConfig::from(kv);
  c.e_min = kv.get_double("e_min", c.e_min);
  c.cv_folds = static_cast<std::size_t>(positive(kv.get_int("cv_folds", static_cast<long long>(c.cv_folds)), "cv_folds"));
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.hyper.l2 = kv.get_double("l2", c.hyper.l2);
  c.hyper.max_iterations = static_cast<int>(kv.get_int("max_iterations", c.hyper.max_iterations));
  c.hyper.tolerance = kv.get_double("tolerance", c.hyper.tolerance);
  c.feature_threshold = kv.get_double("feature_threshold", c.feature_threshold);
  if (kv.contains("default_threads")) {
    c.default_threads = static_cast<unsigned>(positive(kv.get_int("default_threads", 0), "default_threads"));
  }
  c.corpus.pages = static_cast<std::size_t>(positive(kv.get_int("corpus_pages", 50), "corpus_pages"));
  c.corpus.min_nodes = positive(kv.get_int("corpus_min_nodes", 50), "corpus_min_nodes");
  c.corpus.max_nodes = positive(kv.get_int("corpus_max_nodes", 3000), "corpus_max_nodes");
  c.corpus.max_children =
      static_cast<std::uint32_t>(positive(kv.get_int("corpus_max_children", 12), "corpus_max_children"));
  c.validate();
  return c;
}

void PipelineConfig::validate() const {
  work.validate();
  buckets.validate();
  if (cv_folds < 2) throw Error(ErrorKind::configuration, "cv_folds must be >= 2");
  if (hyper.l2 < 0.0) throw Error(ErrorKind::configuration, "l2 must be >= 0");
  if (hyper.max_iterations < 1) throw Error(ErrorKind::configuration, "max_iterations must be >= 1");
  if (!(hyper.tolerance > 0.0)) throw Error(ErrorKind::configuration, "tolerance must be positive");
  if (power.idle_power_w < 0.0 || power.per_core_active_power_w < 0.0) {
    throw Error(ErrorKind::configuration, "power figures must be >= 0");
  }
  if (corpus.min_nodes > corpus.max_nodes) {
    throw Error(ErrorKind::configuration, "corpus_min_nodes exceeds corpus_max_nodes");
  }
  if (default_threads &&
      std::find(work.thread_counts.begin(), work.thread_counts.end(), *default_threads) == work.thread_counts.end()) {
    throw Error(ErrorKind::configuration, "default_threads must be one of thread_counts");
  }
}

unsigned PipelineConfig::default_thread_count() const {
  if (default_threads) return *default_threads;
  return *std::max_element(work.thread_counts.begin(), work.thread_counts.end());
}

std::vector<std::pair<std::string, DomTree>> synthetic_corpus(const CorpusSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> fanout(1, std::max<std::uint32_t>(spec.max_children, 1));
  const double lo = std::log(static_cast<double>(spec.min_nodes));
  const double hi = std::log(static_cast<double>(spec.max_nodes));

  std::vector<std::pair<std::string, DomTree>> out;
  for (std::size_t i = 0; i < spec.pages; ++i) {
    SyntheticTreeSpec s;
    s.target_node_count = static_cast<std::uint64_t>(std::llround(std::exp(lo + (hi - lo) * unit(rng))));
    s.min_children = 1;
    s.max_children = fanout(rng);
    s.depth_bias = unit(rng);
    s.seed = rng();
    char id[32];
    std::snprintf(id, sizeof id, "synth_%03zu", i);
    out.emplace_back(id, generate_tree(s));
  }
  return out;
}

std::vector<fs::path> list_pages(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::usage, "'" + dir.string() + "' is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".html" || ext == ".htm") out.push_back(entry.path());
  }
  if (out.empty()) throw Error(ErrorKind::usage, "no .html files in '" + dir.string() + "'");
  std::sort(out.begin(), out.end());
  return out;
}

void cmd_generate(const PipelineConfig& config, std::ostream& log) {
  const auto dir = prepare_output(config);
  const auto corpus = synthetic_corpus(config.corpus, config.seed);
  for (const auto& [id, tree] : corpus) {
    write_artifact(dir / (id + ".html"), [&](std::ostream& out) { out << to_html(tree); });
  }
  log << "generated " << corpus.size() << " pages in " << dir.string() << '\n';
}

void cmd_features(const fs::path& pages_dir, const PipelineConfig& config, std::ostream& log) {
  const auto pages = list_pages(pages_dir);
  std::vector<PageFeatures> rows;
  std::vector<std::pair<std::string, std::vector<std::uint64_t>>> profiles;
  std::vector<std::pair<std::string, std::string>> failures;
  for (const auto& path : pages) {
    const auto id = path.stem().string();
    try {
      const auto text = read_text(path);
      const auto tree = parse_html(text);
      rows.push_back(compute_features(tree, id));
      profiles.emplace_back(id, width_profile(tree));
    } catch (const Error& e) {
      failures.emplace_back(path.filename().string(), e.what());
    }
  }

  const auto dir = prepare_output(config);
  write_artifact(dir / "features.csv", [&](std::ostream& out) { write_features_csv(out, rows); });
  write_artifact(dir / "width_profile.csv", [&](std::ostream& out) {
    out << "page_id,depth,width\n";
    csv::Writer w(out);
    for (const auto& [id, widths] : profiles) {
      for (std::size_t d = 0; d < widths.size(); ++d) {
        w.field(id).field(d + 1).field(static_cast<unsigned long long>(widths[d]));
        w.end_row();
      }
    }
  });
  write_artifact(dir / "feature_errors.csv", [&](std::ostream& out) {
    out << "file,error\n";
    csv::Writer w(out);
    for (const auto& [file, message] : failures) {
      w.field(file).field(message);
      w.end_row();
    }
  });
  log << "features: " << rows.size() << " pages, " << failures.size() << " unparseable\n";
}

void cmd_bench(const std::optional<fs::path>& pages_dir, const PipelineConfig& config, std::ostream& log) {
  config.work.validate();
  std::vector<std::pair<std::string, DomTree>> trees;
  if (pages_dir) {
    for (const auto& path : list_pages(*pages_dir)) {
      try {
        trees.emplace_back(path.stem().string(), parse_html(read_text(path)));
      } catch (const Error& e) {
        log << "skipping " << path.filename().string() << ": " << e.what() << '\n';
      }
    }
    if (trees.empty()) throw Error(ErrorKind::input, "no parseable pages to benchmark");
  } else {
    trees = synthetic_corpus(config.corpus, config.seed);
  }

  const auto dir = prepare_output(config);
  std::size_t rows = 0;
  write_artifact(dir / "measurements.csv", [&](std::ostream& out) {
    write_measurements_header(out);
    for (const auto& [id, tree] : trees) {
      for (const auto& r : run_bench(tree, id, config.work)) {
        write_measurement_row(out, r, estimate_energy(r, config.power));
        ++rows;
      }
    }
  });
  log << "bench: " << trees.size() << " pages, " << rows << " rows (" << to_string(config.work.timing)
      << " timing)\n";
}

void cmd_label(const fs::path& measurements, const std::optional<fs::path>& energy, const PipelineConfig& config,
               std::ostream& log) {
  require_file(measurements, "measurements file");
  if (energy) require_file(*energy, "energy file");
  const auto trials = ingest_csv(measurements);
  const auto aggs = aggregate(trials, energy ? ingest_energy_csv(*energy) : EnergyTable{});

  std::vector<SpeedupSet> sp;
  std::vector<std::optional<GreenupSet>> gr;
  for (const auto& [page, page_aggs] : by_page(aggs)) {
    sp.push_back(speedups(page_aggs));
    const bool has_energy =
        std::all_of(page_aggs.begin(), page_aggs.end(), [](const auto& a) { return a.median_energy_j.has_value(); });
    gr.push_back(has_energy ? std::optional<GreenupSet>(greenups(page_aggs)) : std::nullopt);
  }

  LabelingOptions options;
  options.model = config.cost_model;
  options.buckets = config.buckets;
  options.e_min = config.e_min;
  const auto labels = label_pages(aggs, options);

  const auto dir = prepare_output(config);
  write_artifact(dir / "aggregates.csv", [&](std::ostream& out) { write_aggregates_csv(out, aggs); });
  write_artifact(dir / "ratios.csv", [&](std::ostream& out) { write_ratios_csv(out, sp, gr); });
  write_artifact(dir / "labels.csv", [&](std::ostream& out) { write_labels_csv(out, labels); });

  std::map<ThreadLabel, std::size_t> counts;
  for (const auto& l : labels) ++counts[l.label];
  log << "labels (" << to_string(config.cost_model) << "):";
  for (const auto& [label, n] : counts) log << ' ' << label << '=' << n;
  log << '\n';
  for (const auto& [t, mad] : mad_summary(aggs)) {
    log << "median MAD at " << t << " threads: " << csv::format_double(mad) << " ms\n";
  }
}

void cmd_train(const fs::path& features, const fs::path& labels, const std::optional<fs::path>& ratios,
               const PipelineConfig& config, std::ostream& log) {
  require_file(features, "features file");
  require_file(labels, "labels file");
  if (ratios) require_file(*ratios, "ratios file");

  const auto feature_rows = parse_features_csv(read_text(features));
  std::map<std::string, ThreadLabel> label_of;
  for (const auto& l : parse_labels(read_text(labels))) label_of[l.page_id] = l.label;

  std::vector<PageFeatures> joined;
  std::vector<ThreadLabel> y;
  for (const auto& f : feature_rows) {
    if (auto it = label_of.find(f.page_id); it != label_of.end()) {
      joined.push_back(f);
      y.push_back(it->second);
    }
  }
  if (joined.empty()) throw Error(ErrorKind::input, "no page has both features and a label");
  const auto all = to_matrix(joined);

  const auto dir = prepare_output(config);
  std::vector<std::string> selected = all.column_names;
  if (ratios) {
    const auto by_page = parse_ratio_targets(read_text(*ratios));
    std::set<std::string> names;
    for (const auto& [page, targets] : by_page) {
      for (const auto& [name, value] : targets) names.insert(name);
    }
    std::vector<std::string> target_names;
    for (const auto* prefix : {"p_", "e_"}) {
      for (const auto& n : names) {
        if (n.starts_with(prefix)) target_names.push_back(n);
      }
    }
    std::vector<std::vector<double>> targets(target_names.size());
    for (const auto& f : joined) {
      auto it = by_page.find(f.page_id);
      if (it == by_page.end()) throw Error(ErrorKind::input, "no ratios for page '" + f.page_id + "'");
      for (std::size_t t = 0; t < target_names.size(); ++t) {
        auto v = it->second.find(target_names[t]);
        if (v == it->second.end()) {
          throw Error(ErrorKind::input, "page '" + f.page_id + "' lacks " + target_names[t]);
        }
        targets[t].push_back(v->second);
      }
    }
    const auto report = correlation_report(all, target_names, targets);
    write_artifact(dir / "correlations.csv", [&](std::ostream& out) { write_correlations_csv(out, report); });
    auto selection = select_features(report, config.feature_threshold);
    if (selection.warning) log << "warning: " << *selection.warning << '\n';
    selected = std::move(selection.names);
  }

  const auto x = all.select_columns(selected);
  const auto cv = cross_validate(x, y, config.cv_folds, config.seed, config.hyper);
  const auto model = train_model(x, y, config.hyper);

  write_artifact(dir / "model.json", [&](std::ostream& out) { out << model_to_json(model); });
  write_artifact(dir / "cv_report.csv", [&](std::ostream& out) { write_cv_report_csv(out, cv); });

  log << "features used:";
  for (const auto& s : selected) log << ' ' << s;
  log << "\ncv (" << config.cv_folds << " folds" << (cv.stratified ? ", stratified" : "")
      << "): mean accuracy " << csv::format_double(cv.mean_accuracy) << ", max "
      << csv::format_double(cv.max_accuracy) << '\n';
  if (!model.converged) log << "warning: training stopped before the gradient tolerance was met\n";
}

std::vector<Prediction> predict_file(const MnrModel& model, const fs::path& input) {
  require_file(input, "input");
  const auto text = read_text(input);
  const auto ext = input.extension().string();
  std::vector<Prediction> out;
  if (ext == ".csv") {
    for (const auto& f : parse_features_csv(text)) out.push_back(predict_features(model, f));
  } else {
    out.push_back(predict_features(model, compute_features(parse_html(text), input.stem().string())));
  }
  return out;
}

void write_predictions_csv(std::ostream& out, const MnrModel& model, std::span<const Prediction> predictions) {
  out << "page_id,label";
  for (auto c : model.classes) out << ",prob_" << c;
  out << '\n';
  csv::Writer w(out);
  for (const auto& p : predictions) {
    w.field(p.page_id).field(p.label);
    for (double v : p.probabilities) w.field(v);
    w.end_row();
  }
}

void cmd_predict(const fs::path& model_path, const fs::path& input, const PipelineConfig& config, std::ostream& log) {
  require_file(model_path, "model file");
  const auto model = load_model(model_path);
  const auto predictions = predict_file(model, input);
  const auto dir = prepare_output(config);
  write_artifact(dir / "predictions.csv",
                 [&](std::ostream& out) { write_predictions_csv(out, model, predictions); });
  write_predictions_csv(log, model, predictions);
}

void cmd_report(const fs::path& measurements, const fs::path& labels, const fs::path& model_path,
                const fs::path& features, const PipelineConfig& config, std::ostream& log) {
  require_file(measurements, "measurements file");
  require_file(labels, "labels file");
  require_file(model_path, "model file");
  require_file(features, "features file");

  const auto aggs = aggregate(ingest_csv(measurements));
  std::map<std::string, ThreadLabel> ideal;
  for (const auto& l : parse_labels(read_text(labels))) ideal[l.page_id] = l.label;
  const auto model = load_model(model_path);
  std::map<std::string, ThreadLabel> predicted;
  for (const auto& f : parse_features_csv(read_text(features))) {
    predicted[f.page_id] = predict_features(model, f).label;
  }

  const auto rows = savings_report(aggs, predicted, ideal, config.default_thread_count());
  const auto dir = prepare_output(config);
  write_artifact(dir / "savings.csv", [&](std::ostream& out) { write_savings_csv(out, rows); });
  write_artifact(dir / "normalized.csv", [&](std::ostream& out) { write_normalized_csv(out, rows); });

  double default_total = 0.0, model_total = 0.0;
  for (const auto& r : rows) {
    default_total += r.default_ms;
    model_total += r.model_ms;
  }
  log << "report: " << rows.size() << " pages";
  if (default_total > 0.0) {
    log << ", total styling time saved vs " << config.default_thread_count()
        << " threads: " << csv::format_double(savings_pct(default_total, model_total)) << "%";
  }
  log << '\n';
}

}  // namespace webpar
