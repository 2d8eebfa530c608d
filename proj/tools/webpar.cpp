#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "webpar/error.hpp"
#include "webpar/pipeline.hpp"

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> cost_model;
  std::optional<std::string> threads;
  std::optional<unsigned> trials;
  std::string out = ".";
};

webpar::PipelineConfig resolve(const Common& c) {
  auto kv = c.config_path.empty() ? webpar::KeyValueConfig{} : webpar::KeyValueConfig::read(c.config_path);
  if (c.seed) kv.set("seed", std::to_string(*c.seed));
  if (c.cost_model) kv.set("cost_model", *c.cost_model);
  if (c.threads) kv.set("thread_counts", *c.threads);
  if (c.trials) kv.set("trials", std::to_string(*c.trials));
  auto config = webpar::PipelineConfig::from(kv);
  config.output_dir = c.out;
  return config;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--cost-model", c.cost_model, "perf | energy | perf_energy");
  cmd->add_option("--threads", c.threads, "thread counts, e.g. 1,2,4");
  cmd->add_option("--trials", c.trials, "trials per configuration");
  cmd->add_option("--out", c.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Web page parallelism toolkit: features, traversal benchmarks, labeling and thread-count models"};
  app.require_subcommand(1);
  Common common;

  std::string pages, measurements, energy, features, labels, ratios, model, input;

  auto* generate = app.add_subcommand("generate", "write a synthetic HTML page corpus");
  add_common(generate, common);

  auto* feat = app.add_subcommand("features", "extract page features and width profiles");
  add_common(feat, common);
  feat->add_option("--pages", pages, "directory of .html files")->required();

  auto* bench = app.add_subcommand("bench", "time styling and layout passes");
  add_common(bench, common);
  bench->add_option("--pages", pages, "directory of .html files (synthetic corpus when omitted)");

  auto* label = app.add_subcommand("label", "aggregate measurements and label pages");
  add_common(label, common);
  label->add_option("--measurements", measurements, "measurements CSV")->required();
  label->add_option("--energy", energy, "energy CSV (page_id,threads,energy_j)");

  auto* train = app.add_subcommand("train", "fit the thread-count model and cross-validate");
  add_common(train, common);
  train->add_option("--features", features, "features CSV")->required();
  train->add_option("--labels", labels, "labels CSV")->required();
  train->add_option("--ratios", ratios, "ratios CSV for feature selection");

  auto* predict = app.add_subcommand("predict", "predict the thread count for a page");
  add_common(predict, common);
  predict->add_option("--model", model, "model JSON")->required();
  predict->add_option("input", input, "HTML page or features CSV")->required();

  auto* report = app.add_subcommand("report", "savings of the model against the default thread count");
  add_common(report, common);
  report->add_option("--measurements", measurements, "measurements CSV")->required();
  report->add_option("--labels", labels, "labels CSV")->required();
  report->add_option("--model", model, "model JSON")->required();
  report->add_option("--features", features, "features CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::filesystem::path>(s); };
  try {
    const auto config = resolve(common);
    auto& log = std::cout;
    if (*generate) webpar::cmd_generate(config, log);
    if (*feat) webpar::cmd_features(pages, config, log);
    if (*bench) webpar::cmd_bench(opt(pages), config, log);
    if (*label) webpar::cmd_label(measurements, opt(energy), config, log);
    if (*train) webpar::cmd_train(features, labels, opt(ratios), config, log);
    if (*predict) webpar::cmd_predict(model, input, config, log);
    if (*report) webpar::cmd_report(measurements, labels, model, features, config, log);
  } catch (const webpar::Error& e) {
    std::cerr << "webpar: " << webpar::to_string(e.kind()) << " error: " << e.what() << '\n';
    return e.kind() == webpar::ErrorKind::usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "webpar: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
