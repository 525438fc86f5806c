#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qfl/classifier.hpp"
#include "qfl/data.hpp"

namespace qfl::pipeline {

struct DataConfig {
  int m = 299;
  int n_train = 200;
  std::uint64_t seed = 1;
  data::SignalRecipe healthy = data::default_healthy_recipe();
  data::SignalRecipe faulty = data::default_faulty_recipe();
};

struct LevelConfig {
  int window = 4;
  int stride = 2;
  int pool_size = 100;
  int min_layers = 1;
  int max_layers = 3;
  int k = 4;
  std::optional<int> pca_dims;  // explicit override; otherwise the threshold rule applies
  int pca_auto_threshold = 64;  // apply PCA only when 2^window exceeds this
  std::uint64_t pool_seed = 0;
  std::uint64_t cluster_seed = 0;
  int pool_window = 2;
  int pool_stride = 2;
};

struct ClassifierConfig {
  classifier::TrainConfig train;
  int hidden1 = 64;
  int hidden2 = 32;
};

/// Every tunable of the pipeline. All seeds are explicit constants; nothing
/// is derived from ambient time.
struct ExperimentConfig {
  DataConfig data;
  std::vector<LevelConfig> levels;
  ClassifierConfig classifier;
  std::filesystem::path workspace = "workspace";
};

/// Two quanvolution levels (window 4, stride 2, K 4, pool 2/2) over the
/// 192-sample signals, then a 176 -> 64 -> 32 -> 2 head.
ExperimentConfig default_config();

/// Strict JSON parse: unknown keys are errors, absent keys take defaults.
/// Throws ConfigError with the offending key path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the effective config, workspace path excluded; the
/// manifest hashes this and its sections.
std::string config_to_json(const ExperimentConfig& cfg);
std::string data_section_json(const ExperimentConfig& cfg);
std::string level_section_json(const ExperimentConfig& cfg, int level);  // 1-based
std::string classifier_section_json(const ExperimentConfig& cfg);

/// Rederives every seed in the config from one master value.
void apply_seed_override(ExperimentConfig& cfg, std::uint64_t master);

/// Range checks plus the geometry chain; throws ConfigError before any
/// circuit is evaluated.
void validate(const ExperimentConfig& cfg);

/// Feature-map lengths after each level's quanvolution and pooling, starting
/// from the raw sample length. Throws ConfigError naming the failing level.
struct LevelGeometry {
  int quanv_length = 0;
  int pooled_length = 0;
  int channels = 0;
};
std::vector<LevelGeometry> geometry_chain(const ExperimentConfig& cfg);

/// Flattened feature vector length produced by the configured hierarchy.
int feature_dimension(const ExperimentConfig& cfg);

/// PCA dimensionality select_filters should use for this level: the explicit
/// override when set, otherwise the threshold rule.
std::optional<int> effective_pca_dims(const LevelConfig& level);

}  // namespace qfl::pipeline
