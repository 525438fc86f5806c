#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qfl/config.hpp"

namespace qfl::pipeline {

/// Fixed file layout inside one experiment workspace directory.
class Workspace {
public:
  explicit Workspace(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path dataset_file() const { return root_ / "dataset.txt"; }
  std::filesystem::path split_file() const { return root_ / "split.txt"; }
  std::filesystem::path bank_dir(int level) const {
    return root_ / "banks" / ("level_" + std::to_string(level));
  }
  std::filesystem::path features_train_file() const { return root_ / "cache" / "features_train.txt"; }
  std::filesystem::path features_test_file() const { return root_ / "cache" / "features_test.txt"; }
  std::filesystem::path normalizer_file() const { return root_ / "cache" / "normalizer.txt"; }
  std::filesystem::path checkpoint_file() const { return root_ / "model" / "checkpoint.txt"; }
  std::filesystem::path metrics_file() const { return root_ / "model" / "metrics.csv"; }
  std::filesystem::path manifest_file() const { return root_ / "manifest.json"; }
  std::filesystem::path lock_file() const { return root_ / ".lock"; }

  void ensure_root() const { std::filesystem::create_directories(root_); }

private:
  std::filesystem::path root_;
};

/// Rejects concurrent invocations against one workspace. Created exclusively;
/// removed on destruction. A stale file after a crash must be removed by hand.
class WorkspaceLock {
public:
  explicit WorkspaceLock(const Workspace& ws);
  ~WorkspaceLock();
  WorkspaceLock(const WorkspaceLock&) = delete;
  WorkspaceLock& operator=(const WorkspaceLock&) = delete;

private:
  std::filesystem::path path_;
};

struct StageReport {
  std::string stage;
  bool cache_hit = false;
  double seconds = 0.0;
  std::string summary;
};

/// Synthesizes the dataset and the train/test split, writing both files.
StageReport cmd_generate(const ExperimentConfig& cfg, const Workspace& ws);

/// Builds the candidate pool for one level (1-based), clusters its
/// distribution embeddings and persists the selected filter bank. Needs no
/// dataset: filters are learned from circuit output distributions alone.
StageReport cmd_learn_filters(const ExperimentConfig& cfg, const Workspace& ws, int level);

/// Runs the quanvolution hierarchy over every sample once and caches raw
/// train/test feature matrices plus the normalizer fitted on the train split.
StageReport cmd_extract(const ExperimentConfig& cfg, const Workspace& ws);

/// Trains the classifier head on the cached features. Performs no circuit
/// evaluation; qsim::circuit_evaluations() stays unchanged across this call.
StageReport cmd_train(const ExperimentConfig& cfg, const Workspace& ws);

struct RunSummary {
  std::vector<StageReport> stages;
  double final_test_accuracy = 0.0;
  double final_test_loss = 0.0;
};

/// generate -> learn-filters per level -> extract -> train. Completed stages
/// stay cached; the first failing stage aborts with its error.
RunSummary cmd_run_all(const ExperimentConfig& cfg, const Workspace& ws);

/// Human-readable description of a persisted bank.
std::string inspect_bank(const ExperimentConfig& cfg, const Workspace& ws, int level);

}  // namespace qfl::pipeline
