// qfl: quanvolutional feature learning pipeline.
//
// Subcommands drive the stages of one experiment workspace: synthesize the
// dataset, learn filter banks by clustering circuit output distributions,
// extract and cache quanvolution features, and train the classifier head on
// the cached features. Exit codes: 0 success, 2 config error, 3 missing
// prerequisite, 4 integrity failure, 1 anything else.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qfl/errors.hpp"
#include "qfl/pipeline.hpp"

namespace {

using qfl::pipeline::ExperimentConfig;
using qfl::pipeline::StageReport;
using qfl::pipeline::Workspace;

void print_report(const StageReport& report) {
  std::cout << "[" << report.stage << "] " << report.summary;
  if (report.cache_hit)
    std::cout << "\n";
  else
    std::cout << " (" << report.seconds << " s)\n";
}

struct CommonOptions {
  std::string config_path;
  std::string workspace_path;
  std::optional<std::uint64_t> seed_override;
};

ExperimentConfig resolve_config(const CommonOptions& opts) {
  ExperimentConfig cfg = opts.config_path.empty() ? qfl::pipeline::default_config()
                                                  : qfl::pipeline::load_config(opts.config_path);
  if (!opts.workspace_path.empty()) cfg.workspace = opts.workspace_path;
  if (opts.seed_override) qfl::pipeline::apply_seed_override(cfg, *opts.seed_override);
  qfl::pipeline::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qfl: unsupervised quanvolutional feature learning for 1-D fault detection"};
  app.require_subcommand(1);

  CommonOptions opts;
  app.add_option("--config", opts.config_path, "Experiment config file (JSON)");
  app.add_option("--workspace", opts.workspace_path,
                 "Workspace directory (overrides the config's `workspace`)");
  app.add_option("--seed-override", opts.seed_override,
                 "Rederive every seed in the config from this master seed");

  auto* cmd_generate = app.add_subcommand("generate", "Synthesize the dataset and split files");
  auto* cmd_learn = app.add_subcommand("learn-filters", "Learn one level's filter bank");
  int learn_level = 1;
  cmd_learn->add_option("--level", learn_level, "Level to learn (1-based)")->required();
  auto* cmd_extract =
      app.add_subcommand("extract", "Extract and cache features for every sample");
  auto* cmd_train = app.add_subcommand("train", "Train the classifier head on cached features");
  auto* cmd_run_all = app.add_subcommand("run-all", "Run every stage in order");
  auto* cmd_inspect = app.add_subcommand("inspect-bank", "Describe a persisted filter bank");
  int inspect_level = 1;
  cmd_inspect->add_option("--level", inspect_level, "Level to inspect (1-based)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig cfg = resolve_config(opts);
    const Workspace ws(cfg.workspace);

    if (cmd_inspect->parsed()) {
      std::cout << qfl::pipeline::inspect_bank(cfg, ws, inspect_level);
      return 0;
    }

    ws.ensure_root();
    const qfl::pipeline::WorkspaceLock lock(ws);

    if (cmd_generate->parsed()) {
      print_report(qfl::pipeline::cmd_generate(cfg, ws));
    } else if (cmd_learn->parsed()) {
      print_report(qfl::pipeline::cmd_learn_filters(cfg, ws, learn_level));
    } else if (cmd_extract->parsed()) {
      print_report(qfl::pipeline::cmd_extract(cfg, ws));
    } else if (cmd_train->parsed()) {
      print_report(qfl::pipeline::cmd_train(cfg, ws));
    } else if (cmd_run_all->parsed()) {
      const auto summary = qfl::pipeline::cmd_run_all(cfg, ws);
      double total = 0.0;
      for (const auto& report : summary.stages) {
        print_report(report);
        total += report.seconds;
      }
      std::cout << "run-all: test accuracy " << summary.final_test_accuracy << ", total "
                << total << " s\n";
    }
    return 0;
  } catch (const qfl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qfl::MissingPrerequisite& e) {
    std::cerr << "missing prerequisite: " << e.what() << "\n";
    return 3;
  } catch (const qfl::IntegrityError& e) {
    std::cerr << "integrity failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
