#include "qfl/config.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "qfl/errors.hpp"
#include "qfl/qsim.hpp"
#include "qfl/quanvolution.hpp"
#include "qfl/rng.hpp"
#include "qfl/textio.hpp"

namespace qfl::pipeline {

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& item : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return item.key() == k;
        }) == allowed.end())
      throw ConfigError("unknown key '" + where + item.key() + "'");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for key '") + key + "'");
  }
}

data::SignalRecipe parse_recipe(const json& obj, bool faulty, const std::string& where) {
  data::SignalRecipe base = faulty ? data::default_faulty_recipe() : data::default_healthy_recipe();
  if (faulty)
    check_keys(obj, {"frequencies", "noise_std", "impulse_period", "impulse_amplitude",
                     "impulse_decay"},
               where);
  else
    check_keys(obj, {"frequencies", "noise_std"}, where);
  base.base_frequencies = get_or(obj, "frequencies", base.base_frequencies);
  base.noise_std = get_or(obj, "noise_std", base.noise_std);
  if (faulty) {
    base.impulse_period = get_or(obj, "impulse_period", base.impulse_period);
    base.impulse_amplitude = get_or(obj, "impulse_amplitude", base.impulse_amplitude);
    base.impulse_decay = get_or(obj, "impulse_decay", base.impulse_decay);
  }
  return base;
}

LevelConfig parse_level(const json& obj, const std::string& where, const LevelConfig& defaults) {
  check_keys(obj,
             {"window", "stride", "pool_size", "min_layers", "max_layers", "k", "pca_dims",
              "pca_auto_threshold", "pool_seed", "cluster_seed", "pool_window", "pool_stride"},
             where);
  LevelConfig level = defaults;
  level.window = get_or(obj, "window", level.window);
  level.stride = get_or(obj, "stride", level.stride);
  level.pool_size = get_or(obj, "pool_size", level.pool_size);
  level.min_layers = get_or(obj, "min_layers", level.min_layers);
  level.max_layers = get_or(obj, "max_layers", level.max_layers);
  level.k = get_or(obj, "k", level.k);
  if (obj.contains("pca_dims") && !obj.at("pca_dims").is_null())
    level.pca_dims = obj.at("pca_dims").get<int>();
  level.pca_auto_threshold = get_or(obj, "pca_auto_threshold", level.pca_auto_threshold);
  level.pool_seed = get_or(obj, "pool_seed", level.pool_seed);
  level.cluster_seed = get_or(obj, "cluster_seed", level.cluster_seed);
  level.pool_window = get_or(obj, "pool_window", level.pool_window);
  level.pool_stride = get_or(obj, "pool_stride", level.pool_stride);
  return level;
}

json recipe_to_json(const data::SignalRecipe& r) {
  json out = {{"frequencies", r.base_frequencies}, {"noise_std", r.noise_std}};
  if (r.faulty) {
    out["impulse_period"] = r.impulse_period;
    out["impulse_amplitude"] = r.impulse_amplitude;
    out["impulse_decay"] = r.impulse_decay;
  }
  return out;
}

json data_to_json(const DataConfig& d) {
  return {{"m", d.m},
          {"n_train", d.n_train},
          {"seed", d.seed},
          {"healthy", recipe_to_json(d.healthy)},
          {"faulty", recipe_to_json(d.faulty)}};
}

json level_to_json(const LevelConfig& level) {
  json out = {{"window", level.window},
              {"stride", level.stride},
              {"pool_size", level.pool_size},
              {"min_layers", level.min_layers},
              {"max_layers", level.max_layers},
              {"k", level.k},
              {"pca_auto_threshold", level.pca_auto_threshold},
              {"pool_seed", level.pool_seed},
              {"cluster_seed", level.cluster_seed},
              {"pool_window", level.pool_window},
              {"pool_stride", level.pool_stride}};
  if (level.pca_dims) out["pca_dims"] = *level.pca_dims;
  return out;
}

json classifier_to_json(const ClassifierConfig& c) {
  return {{"batch_size", c.train.batch_size},
          {"epochs", c.train.epochs},
          {"learning_rate", c.train.learning_rate},
          {"seed", c.train.seed},
          {"hidden1", c.hidden1},
          {"hidden2", c.hidden2}};
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  LevelConfig level1;
  level1.pool_seed = 11;
  level1.cluster_seed = 12;
  LevelConfig level2;
  level2.pool_seed = 21;
  level2.cluster_seed = 22;
  cfg.levels = {level1, level2};
  cfg.classifier.train.seed = 7;
  return cfg;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  check_keys(doc, {"workspace", "data", "levels", "classifier"}, "");

  ExperimentConfig cfg = default_config();
  if (doc.contains("workspace")) cfg.workspace = doc.at("workspace").get<std::string>();

  if (doc.contains("data")) {
    const json& d = doc.at("data");
    check_keys(d, {"m", "n_train", "seed", "healthy", "faulty"}, "data.");
    cfg.data.m = get_or(d, "m", cfg.data.m);
    cfg.data.n_train = get_or(d, "n_train", cfg.data.n_train);
    cfg.data.seed = get_or(d, "seed", cfg.data.seed);
    if (d.contains("healthy")) cfg.data.healthy = parse_recipe(d.at("healthy"), false, "data.healthy.");
    if (d.contains("faulty")) cfg.data.faulty = parse_recipe(d.at("faulty"), true, "data.faulty.");
  }

  if (doc.contains("levels")) {
    const json& levels = doc.at("levels");
    if (!levels.is_array() || levels.empty())
      throw ConfigError("'levels' must be a non-empty array");
    const std::vector<LevelConfig> defaults = default_config().levels;
    cfg.levels.clear();
    for (std::size_t i = 0; i < levels.size(); ++i) {
      // Seeds fall back to distinct per-level constants, never to time.
      LevelConfig level_default = i < defaults.size() ? defaults[i] : defaults.back();
      if (i >= defaults.size()) {
        level_default.pool_seed = 10 * (i + 1) + 1;
        level_default.cluster_seed = 10 * (i + 1) + 2;
      }
      cfg.levels.push_back(
          parse_level(levels[i], "levels[" + std::to_string(i) + "].", level_default));
    }
  }

  if (doc.contains("classifier")) {
    const json& c = doc.at("classifier");
    check_keys(c, {"batch_size", "epochs", "learning_rate", "seed", "hidden1", "hidden2"},
               "classifier.");
    cfg.classifier.train.batch_size = get_or(c, "batch_size", cfg.classifier.train.batch_size);
    cfg.classifier.train.epochs = get_or(c, "epochs", cfg.classifier.train.epochs);
    cfg.classifier.train.learning_rate =
        get_or(c, "learning_rate", cfg.classifier.train.learning_rate);
    cfg.classifier.train.seed = get_or(c, "seed", cfg.classifier.train.seed);
    cfg.classifier.hidden1 = get_or(c, "hidden1", cfg.classifier.hidden1);
    cfg.classifier.hidden2 = get_or(c, "hidden2", cfg.classifier.hidden2);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = textio::read_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json levels = json::array();
  for (const LevelConfig& level : cfg.levels) levels.push_back(level_to_json(level));
  const json doc = {{"data", data_to_json(cfg.data)},
                    {"levels", std::move(levels)},
                    {"classifier", classifier_to_json(cfg.classifier)}};
  return doc.dump(2) + "\n";
}

std::string data_section_json(const ExperimentConfig& cfg) {
  return data_to_json(cfg.data).dump();
}

std::string level_section_json(const ExperimentConfig& cfg, int level) {
  return level_to_json(cfg.levels.at(static_cast<std::size_t>(level - 1))).dump();
}

std::string classifier_section_json(const ExperimentConfig& cfg) {
  return classifier_to_json(cfg.classifier).dump();
}

void apply_seed_override(ExperimentConfig& cfg, std::uint64_t master) {
  cfg.data.seed = mix_seed(master, 1);
  for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
    cfg.levels[i].pool_seed = mix_seed(master, 100 + 2 * i);
    cfg.levels[i].cluster_seed = mix_seed(master, 101 + 2 * i);
  }
  cfg.classifier.train.seed = mix_seed(master, 1000);
}

std::optional<int> effective_pca_dims(const LevelConfig& level) {
  if (level.pca_dims) return level.pca_dims;
  const int dim = 1 << level.window;
  if (dim > level.pca_auto_threshold)
    return std::min({level.pca_auto_threshold, level.pool_size, dim});
  return std::nullopt;
}

std::vector<LevelGeometry> geometry_chain(const ExperimentConfig& cfg) {
  std::vector<LevelGeometry> chain;
  int length = data::kSampleLength;
  int channels = 1;
  for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
    const LevelConfig& level = cfg.levels[i];
    const std::string where = "level " + std::to_string(i + 1);
    LevelGeometry geo;
    try {
      geo.quanv_length = quanvolution::output_length(length, level.window, level.stride);
      geo.pooled_length =
          quanvolution::output_length(geo.quanv_length, level.pool_window, level.pool_stride);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": geometry does not chain: " + e.what());
    }
    geo.channels = channels * level.k;
    chain.push_back(geo);
    length = geo.pooled_length;
    channels = geo.channels;
  }
  return chain;
}

int feature_dimension(const ExperimentConfig& cfg) {
  const auto chain = geometry_chain(cfg);
  return chain.back().channels * chain.back().pooled_length;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.data.m < 2) throw ConfigError("data.m must be >= 2");
  if (cfg.data.n_train < 1 || cfg.data.n_train >= cfg.data.m)
    throw ConfigError("data.n_train must be in [1, m)");
  if (cfg.data.healthy.noise_std < 0.0 || cfg.data.faulty.noise_std < 0.0)
    throw ConfigError("noise_std must be >= 0");
  if (cfg.data.faulty.impulse_amplitude != 0.0 && cfg.data.faulty.impulse_period < 1)
    throw ConfigError("data.faulty.impulse_period must be >= 1");

  if (cfg.levels.empty()) throw ConfigError("at least one level is required");
  for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
    const LevelConfig& level = cfg.levels[i];
    const std::string where = "level " + std::to_string(i + 1) + ": ";
    if (level.window < 1 || level.window > qsim::kMaxQubits)
      throw ConfigError(where + "window must be in [1, " + std::to_string(qsim::kMaxQubits) + "]");
    if (level.stride < 1) throw ConfigError(where + "stride must be >= 1");
    if (level.pool_size < 1) throw ConfigError(where + "pool_size must be >= 1");
    if (level.min_layers < 1 || level.max_layers < level.min_layers)
      throw ConfigError(where + "layer range must satisfy 1 <= min <= max");
    if (level.k < 1 || level.k > level.pool_size)
      throw ConfigError(where + "k must be in [1, pool_size]");
    if (level.pca_dims && (*level.pca_dims < 1 ||
                           *level.pca_dims > std::min(level.pool_size, 1 << level.window)))
      throw ConfigError(where + "pca_dims out of range");
    if (level.pool_window < 1 || level.pool_stride < 1)
      throw ConfigError(where + "pool window and stride must be >= 1");
  }

  const ClassifierConfig& c = cfg.classifier;
  if (c.train.batch_size < 1) throw ConfigError("classifier.batch_size must be >= 1");
  if (c.train.epochs < 0) throw ConfigError("classifier.epochs must be >= 0");
  if (c.train.learning_rate < 0.0) throw ConfigError("classifier.learning_rate must be >= 0");
  if (c.hidden1 < 1 || c.hidden2 < 1) throw ConfigError("classifier hidden widths must be >= 1");

  geometry_chain(cfg);  // throws ConfigError on a broken chain
}

}  // namespace qfl::pipeline
