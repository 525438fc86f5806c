#include "qfl/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qfl/errors.hpp"
#include "qfl/hash.hpp"
#include "qfl/quanvolution.hpp"
#include "qfl/textio.hpp"

namespace qfl::pipeline {

namespace {

using nlohmann::json;

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Timer {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Stage ledger persisted as workspace/manifest.json. Each stage records the
/// hash of its effective inputs and the hashes of every file it wrote.
class Manifest {
public:
  static Manifest load_or_empty(const Workspace& ws) {
    Manifest m;
    m.path_ = ws.manifest_file();
    if (std::filesystem::exists(m.path_)) {
      m.doc_ = json::parse(textio::read_file(m.path_));
    } else {
      m.doc_ = {{"config_hash", ""}, {"stages", json::object()}};
    }
    return m;
  }

  bool stage_fresh(const Workspace& ws, const std::string& stage,
                   const std::string& input_key) const {
    const json* entry = find_stage(stage);
    if (!entry || entry->at("input_key").get<std::string>() != input_key) return false;
    for (const auto& item : entry->at("outputs").items()) {
      const auto file = ws.root() / item.key();
      if (!std::filesystem::exists(file)) return false;
      if (hash::sha256_file(file) != item.value().get<std::string>()) return false;
    }
    return true;
  }

  /// The prerequisite stage must have run and each of its recorded outputs
  /// must still match its digest.
  void require_stage(const Workspace& ws, const std::string& stage,
                     const std::string& command_hint) const {
    const json* entry = find_stage(stage);
    if (!entry)
      throw MissingPrerequisite("stage '" + stage + "' has not run; run `qfl " + command_hint +
                                "` first");
    for (const auto& item : entry->at("outputs").items()) {
      const auto file = ws.root() / item.key();
      if (!std::filesystem::exists(file))
        throw MissingPrerequisite("artifact " + item.key() + " of stage '" + stage +
                                  "' is missing; rerun `qfl " + command_hint + "`");
      const std::string actual = hash::sha256_file(file);
      const std::string expected = item.value().get<std::string>();
      if (actual != expected)
        throw IntegrityError("artifact " + item.key() + " does not match the manifest digest (" +
                             "expected " + expected.substr(0, 12) + "..., got " +
                             actual.substr(0, 12) + "...)");
    }
  }

  /// Concatenation of the recorded output digests, in key order.
  std::string stage_digests(const std::string& stage) const {
    const json* entry = find_stage(stage);
    if (!entry) return {};
    std::string out;
    for (const auto& item : entry->at("outputs").items())
      out += item.key() + "=" + item.value().get<std::string>() + ";";
    return out;
  }

  void record_stage(const Workspace& ws, const std::string& stage, const std::string& input_key,
                    const std::vector<std::filesystem::path>& outputs, json info) {
    json out_hashes = json::object();
    for (const auto& file : outputs) {
      const auto rel = std::filesystem::relative(file, ws.root()).generic_string();
      out_hashes[rel] = hash::sha256_file(file);
    }
    doc_["stages"][stage] = {{"input_key", input_key},
                             {"outputs", std::move(out_hashes)},
                             {"completed_at", utc_now()},
                             {"info", std::move(info)}};
  }

  const json* stage_info(const std::string& stage) const {
    const json* entry = find_stage(stage);
    return entry ? &entry->at("info") : nullptr;
  }

  void set_config_hash(const std::string& hash) { doc_["config_hash"] = hash; }

  void save() { textio::write_file(path_, doc_.dump(2) + "\n"); }

private:
  const json* find_stage(const std::string& stage) const {
    const auto& stages = doc_.at("stages");
    const auto it = stages.find(stage);
    return it == stages.end() ? nullptr : &*it;
  }

  std::filesystem::path path_;
  json doc_;
};

std::string level_stage_name(int level) { return "filters_level_" + std::to_string(level); }

void check_level_index(const ExperimentConfig& cfg, int level) {
  if (level < 1 || static_cast<std::size_t>(level) > cfg.levels.size())
    throw ConfigError("level must be in [1, " + std::to_string(cfg.levels.size()) + "], got " +
                      std::to_string(level));
}

}  // namespace

WorkspaceLock::WorkspaceLock(const Workspace& ws) : path_(ws.lock_file()) {
  std::filesystem::create_directories(path_.parent_path());
  std::FILE* f = std::fopen(path_.string().c_str(), "wx");
  if (!f)
    throw std::runtime_error("workspace " + ws.root().string() +
                             " is locked by another invocation (" + path_.string() +
                             " exists; remove it if that run crashed)");
  std::fclose(f);
}

WorkspaceLock::~WorkspaceLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

StageReport cmd_generate(const ExperimentConfig& cfg, const Workspace& ws) {
  Timer timer;
  ws.ensure_root();
  Manifest manifest = Manifest::load_or_empty(ws);
  const std::string input_key = hash::sha256_hex(data_section_json(cfg));

  StageReport report{.stage = "generate"};
  if (manifest.stage_fresh(ws, "generate", input_key)) {
    report.cache_hit = true;
    report.seconds = timer.seconds();
    report.summary = "dataset up to date (cache hit)";
    return report;
  }

  data::Dataset ds = data::generate_dataset(cfg.data.healthy, cfg.data.faulty, cfg.data.m,
                                            cfg.data.seed);
  ds = data::split(std::move(ds), cfg.data.n_train, cfg.data.seed);
  data::save_dataset(ds, ws.dataset_file());
  data::save_split(ds, ws.split_file());

  int healthy_count = 0;
  for (std::size_t r = 0; r < ds.labels.rows(); ++r)
    if (ds.labels(r, 0) == 1.0) ++healthy_count;
  const int faulty_count = cfg.data.m - healthy_count;

  manifest.set_config_hash(hash::sha256_hex(config_to_json(cfg)));
  manifest.record_stage(ws, "generate", input_key, {ws.dataset_file(), ws.split_file()},
                        {{"m", cfg.data.m},
                         {"healthy", healthy_count},
                         {"faulty", faulty_count},
                         {"n_train", cfg.data.n_train},
                         {"n_test", cfg.data.m - cfg.data.n_train}});
  manifest.save();

  std::ostringstream summary;
  summary << cfg.data.m << " samples (" << healthy_count << " healthy, " << faulty_count
          << " faulty), split " << cfg.data.n_train << "/" << (cfg.data.m - cfg.data.n_train);
  report.seconds = timer.seconds();
  report.summary = summary.str();
  return report;
}

StageReport cmd_learn_filters(const ExperimentConfig& cfg, const Workspace& ws, int level) {
  Timer timer;
  check_level_index(cfg, level);
  ws.ensure_root();
  Manifest manifest = Manifest::load_or_empty(ws);
  const LevelConfig& lc = cfg.levels[static_cast<std::size_t>(level - 1)];
  const std::string stage = level_stage_name(level);
  const std::string input_key = hash::sha256_hex(
      level_section_json(cfg, level) + "|catalogue=" + std::to_string(ansatz::kCatalogueVersion));

  StageReport report{.stage = stage};
  if (manifest.stage_fresh(ws, stage, input_key)) {
    report.cache_hit = true;
    report.seconds = timer.seconds();
    report.summary = "bank up to date (cache hit)";
    return report;
  }

  const ansatz::CandidatePool pool =
      ansatz::build_pool(lc.window, lc.pool_size, {lc.min_layers, lc.max_layers}, lc.pool_seed);
  cluster::KMeansResult clustering;
  cluster::FilterBank bank =
      cluster::select_filters(pool, lc.k, effective_pca_dims(lc), lc.cluster_seed, &clustering);
  bank.level = level;

  const auto dir = ws.bank_dir(level);
  std::filesystem::remove_all(dir);
  cluster::save_bank(bank, dir);

  std::vector<std::filesystem::path> outputs = {dir / "manifest.json"};
  json templates = json::array();
  for (std::size_t i = 0; i < bank.filters.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "filter_%03zu.json", i);
    outputs.push_back(dir / name);
    templates.push_back(bank.filters[i].tmpl.template_id);
  }

  manifest.set_config_hash(hash::sha256_hex(config_to_json(cfg)));
  manifest.record_stage(ws, stage, input_key, outputs,
                        {{"kmeans_objective", clustering.objective},
                         {"kmeans_iterations", clustering.n_iterations},
                         {"templates", templates},
                         {"selection_indices", bank.selection_indices}});
  manifest.save();

  std::ostringstream summary;
  summary << "K=" << lc.k << " filters from pool of " << lc.pool_size
          << " (kmeans objective " << clustering.objective << ", templates";
  for (const auto& t : templates) summary << ' ' << t.get<std::string>();
  summary << "); learned from circuit distributions only, no dataset required";
  report.seconds = timer.seconds();
  report.summary = summary.str();
  return report;
}

namespace {

struct LoadedInputs {
  data::Dataset dataset;
  std::vector<cluster::FilterBank> banks;
};

LoadedInputs load_extract_inputs(const ExperimentConfig& cfg, const Workspace& ws,
                                 const Manifest& manifest) {
  manifest.require_stage(ws, "generate", "generate");
  for (std::size_t i = 1; i <= cfg.levels.size(); ++i)
    manifest.require_stage(ws, level_stage_name(static_cast<int>(i)),
                           "learn-filters --level " + std::to_string(i));

  LoadedInputs inputs;
  inputs.dataset = data::load_dataset(ws.dataset_file());
  data::load_split(inputs.dataset, ws.split_file());
  if (static_cast<int>(inputs.dataset.samples.rows()) != cfg.data.m)
    throw ConfigError("dataset on disk has " + std::to_string(inputs.dataset.samples.rows()) +
                      " samples but the config expects " + std::to_string(cfg.data.m));

  for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
    cluster::FilterBank bank = cluster::load_bank(ws.bank_dir(static_cast<int>(i + 1)));
    const LevelConfig& lc = cfg.levels[i];
    if (static_cast<int>(bank.filters.size()) != lc.k)
      throw ConfigError("bank level " + std::to_string(i + 1) + " holds " +
                        std::to_string(bank.filters.size()) + " filters, config expects " +
                        std::to_string(lc.k));
    for (const auto& filter : bank.filters)
      if (filter.n_qubits() != lc.window)
        throw ConfigError("bank level " + std::to_string(i + 1) + " filters act on " +
                          std::to_string(filter.n_qubits()) + " qubits, config window is " +
                          std::to_string(lc.window));
    inputs.banks.push_back(std::move(bank));
  }
  return inputs;
}

std::string extract_input_key(const ExperimentConfig& cfg, const Manifest& manifest) {
  std::string key = data_section_json(cfg);
  for (std::size_t i = 1; i <= cfg.levels.size(); ++i)
    key += "|" + level_section_json(cfg, static_cast<int>(i));
  key += "|" + manifest.stage_digests("generate");
  for (std::size_t i = 1; i <= cfg.levels.size(); ++i)
    key += "|" + manifest.stage_digests(level_stage_name(static_cast<int>(i)));
  return hash::sha256_hex(key);
}

}  // namespace

StageReport cmd_extract(const ExperimentConfig& cfg, const Workspace& ws) {
  Timer timer;
  ws.ensure_root();
  Manifest manifest = Manifest::load_or_empty(ws);
  geometry_chain(cfg);  // reject broken geometry before touching any circuit

  const std::string input_key = extract_input_key(cfg, manifest);
  StageReport report{.stage = "extract"};
  if (manifest.stage_fresh(ws, "extract", input_key)) {
    report.cache_hit = true;
    report.seconds = timer.seconds();
    report.summary = "feature cache up to date (cache hit)";
    return report;
  }

  LoadedInputs inputs = load_extract_inputs(cfg, ws, manifest);
  const std::size_t m = inputs.dataset.samples.rows();

  // One evolving representation per sample; every level's input scale is
  // fitted on the training split only, then frozen for all samples.
  std::vector<Matrix> reps(m);
  for (std::size_t i = 0; i < m; ++i) {
    reps[i] = Matrix(1, data::kSampleLength);
    reps[i].set_row(0, inputs.dataset.samples.row(i));
  }

  json scales = json::array();
  for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
    const LevelConfig& lc = cfg.levels[l];
    std::vector<double> train_values;
    for (int idx : inputs.dataset.train_indices) {
      const auto values = reps[static_cast<std::size_t>(idx)].data();
      train_values.insert(train_values.end(), values.begin(), values.end());
    }
    const quanvolution::AffineScale scale = quanvolution::fit_scale(train_values);
    scales.push_back({{"lo", scale.lo}, {"hi", scale.hi}});

    quanvolution::QuanvLayerConfig layer{lc.window, lc.stride, inputs.banks[l], scale};
    for (std::size_t i = 0; i < m; ++i) {
      quanvolution::FeatureMap map = quanvolution::quanvolve({reps[i]}, layer);
      map = quanvolution::max_pool(map, lc.pool_window, lc.pool_stride);
      reps[i] = std::move(map.values);
    }
  }

  const std::size_t dim = reps[0].data().size();
  const auto build_features = [&](const std::vector<int>& indices) {
    Matrix features(indices.size(), dim);
    for (std::size_t r = 0; r < indices.size(); ++r)
      features.set_row(r, reps[static_cast<std::size_t>(indices[r])].data());
    return features;
  };
  const Matrix train_features = build_features(inputs.dataset.train_indices);
  const Matrix test_features = build_features(inputs.dataset.test_indices);
  const classifier::Normalizer norm = classifier::fit_normalizer(train_features);

  std::filesystem::create_directories(ws.features_train_file().parent_path());
  textio::write_matrix_file(ws.features_train_file(), train_features);
  textio::write_matrix_file(ws.features_test_file(), test_features);
  classifier::save_normalizer(norm, ws.normalizer_file());

  manifest.set_config_hash(hash::sha256_hex(config_to_json(cfg)));
  manifest.record_stage(ws, "extract", input_key,
                        {ws.features_train_file(), ws.features_test_file(), ws.normalizer_file()},
                        {{"feature_dim", dim},
                         {"n_train", train_features.rows()},
                         {"n_test", test_features.rows()},
                         {"level_scales", std::move(scales)}});
  manifest.save();

  std::ostringstream summary;
  summary << "cached features " << m << "x" << dim << " (train " << train_features.rows()
          << ", test " << test_features.rows() << ")";
  report.seconds = timer.seconds();
  report.summary = summary.str();
  return report;
}

StageReport cmd_train(const ExperimentConfig& cfg, const Workspace& ws) {
  Timer timer;
  ws.ensure_root();
  Manifest manifest = Manifest::load_or_empty(ws);

  std::string key = classifier_section_json(cfg);
  key += "|" + manifest.stage_digests("extract");
  key += "|" + manifest.stage_digests("generate");
  const std::string input_key = hash::sha256_hex(key);

  StageReport report{.stage = "train"};
  if (manifest.stage_fresh(ws, "train", input_key)) {
    const json* info = manifest.stage_info("train");
    report.cache_hit = true;
    report.seconds = timer.seconds();
    std::ostringstream summary;
    summary << "model up to date (cache hit); test accuracy "
            << info->at("final_test_accuracy").get<double>();
    report.summary = summary.str();
    return report;
  }

  manifest.require_stage(ws, "generate", "generate");
  manifest.require_stage(ws, "extract", "extract");

  data::Dataset dataset = data::load_dataset(ws.dataset_file());
  data::load_split(dataset, ws.split_file());
  const Matrix train_features = textio::read_matrix_file(ws.features_train_file());
  const Matrix test_features = textio::read_matrix_file(ws.features_test_file());
  const classifier::Normalizer norm = classifier::load_normalizer(ws.normalizer_file());

  const Matrix x_train = norm.transform(train_features);
  const Matrix x_test = norm.transform(test_features);
  const auto build_labels = [&dataset](const std::vector<int>& indices) {
    Matrix y(indices.size(), classifier::kNumClasses);
    for (std::size_t r = 0; r < indices.size(); ++r)
      y.set_row(r, dataset.labels.row(static_cast<std::size_t>(indices[r])));
    return y;
  };
  const Matrix y_train = build_labels(dataset.train_indices);
  const Matrix y_test = build_labels(dataset.test_indices);

  classifier::TrainResult result =
      classifier::train(x_train, y_train, cfg.classifier.train, cfg.classifier.hidden1,
                        cfg.classifier.hidden2, &x_test, &y_test);
  const classifier::Evaluation final_eval = classifier::evaluate(result.model, x_test, y_test);

  std::filesystem::create_directories(ws.checkpoint_file().parent_path());
  classifier::save_checkpoint(result.model, ws.checkpoint_file());
  classifier::write_metrics_csv(result.history, ws.metrics_file());

  manifest.set_config_hash(hash::sha256_hex(config_to_json(cfg)));
  manifest.record_stage(ws, "train", input_key, {ws.checkpoint_file(), ws.metrics_file()},
                        {{"epochs", cfg.classifier.train.epochs},
                         {"final_test_accuracy", final_eval.accuracy},
                         {"final_test_loss", final_eval.loss}});
  manifest.save();

  std::ostringstream summary;
  summary << "test accuracy " << final_eval.accuracy << " (loss " << final_eval.loss << ") after "
          << cfg.classifier.train.epochs << " epochs";
  report.seconds = timer.seconds();
  report.summary = summary.str();
  return report;
}

RunSummary cmd_run_all(const ExperimentConfig& cfg, const Workspace& ws) {
  validate(cfg);
  RunSummary summary;
  summary.stages.push_back(cmd_generate(cfg, ws));
  for (std::size_t i = 1; i <= cfg.levels.size(); ++i)
    summary.stages.push_back(cmd_learn_filters(cfg, ws, static_cast<int>(i)));
  summary.stages.push_back(cmd_extract(cfg, ws));
  summary.stages.push_back(cmd_train(cfg, ws));

  const Manifest manifest = Manifest::load_or_empty(ws);
  if (const json* info = manifest.stage_info("train")) {
    summary.final_test_accuracy = info->at("final_test_accuracy").get<double>();
    summary.final_test_loss = info->at("final_test_loss").get<double>();
  }
  return summary;
}

std::string inspect_bank(const ExperimentConfig& cfg, const Workspace& ws, int level) {
  check_level_index(cfg, level);
  const Manifest manifest = Manifest::load_or_empty(ws);
  manifest.require_stage(ws, level_stage_name(level),
                         "learn-filters --level " + std::to_string(level));
  const cluster::FilterBank bank = cluster::load_bank(ws.bank_dir(level));

  std::ostringstream out;
  out << "bank level " << bank.level << ": " << bank.filters.size() << " filters\n";
  out << "provenance: pool_seed=" << bank.provenance.pool_seed << " k=" << bank.provenance.k
      << " pca_dims=" << bank.provenance.pca_dims
      << " kmeans_seed=" << bank.provenance.kmeans_seed << "\n";
  for (std::size_t i = 0; i < bank.filters.size(); ++i) {
    const auto& f = bank.filters[i];
    out << "  [" << i << "] " << f.tmpl.template_id << " layers=" << f.tmpl.n_layers
        << " qubits=" << f.tmpl.n_qubits << " gates=" << f.tmpl.gates.size()
        << " params=" << f.params.size() << " bind_seed=" << f.bind_seed
        << " pool_index=" << bank.selection_indices[i] << "\n";
  }
  return out.str();
}

}  // namespace qfl::pipeline
