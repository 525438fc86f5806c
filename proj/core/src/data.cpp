#include "qfl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "qfl/rng.hpp"
#include "qfl/textio.hpp"

namespace qfl::data {

SignalRecipe default_healthy_recipe() {
  SignalRecipe r;
  r.faulty = false;
  r.base_frequencies = {3.1, 7.4};
  r.noise_std = 0.3;
  return r;
}

SignalRecipe default_faulty_recipe() {
  SignalRecipe r;
  r.faulty = true;
  r.base_frequencies = {3.1, 7.4};
  r.noise_std = 0.3;
  r.impulse_period = 24;
  r.impulse_amplitude = 0.9;
  r.impulse_decay = 0.8;
  return r;
}

std::vector<double> render_signal(const SignalRecipe& recipe, std::uint64_t sample_seed) {
  // Separate streams keep the carrier identical whether or not impulses are
  // added on top.
  Rng carrier_rng(mix_seed(sample_seed, 0));
  Rng impulse_rng(mix_seed(sample_seed, 1));

  std::vector<double> x(kSampleLength, 0.0);
  for (double freq : recipe.base_frequencies) {
    const double phase = carrier_rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int t = 0; t < kSampleLength; ++t)
      x[static_cast<std::size_t>(t)] +=
          std::sin(2.0 * std::numbers::pi * freq * t / kSampleLength + phase);
  }
  if (recipe.noise_std > 0.0)
    for (double& v : x) v += recipe.noise_std * carrier_rng.normal();

  if (recipe.faulty && recipe.impulse_amplitude != 0.0) {
    if (recipe.impulse_period < 1)
      throw std::invalid_argument("faulty recipe needs impulse_period >= 1");
    const int start = static_cast<int>(
        impulse_rng.uniform_int(static_cast<std::uint64_t>(recipe.impulse_period)));
    for (int onset = start; onset < kSampleLength; onset += recipe.impulse_period) {
      double amp = recipe.impulse_amplitude;
      for (int t = onset; t < kSampleLength && std::abs(amp) > 1e-6; ++t) {
        x[static_cast<std::size_t>(t)] += amp;
        amp *= recipe.impulse_decay;
      }
    }
  }
  return x;
}

Dataset generate_dataset(const SignalRecipe& healthy, const SignalRecipe& faulty, int m,
                         std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("dataset size must be >= 2, got " + std::to_string(m));
  if (healthy.faulty) throw std::invalid_argument("healthy recipe is marked faulty");
  if (!faulty.faulty) throw std::invalid_argument("faulty recipe is not marked faulty");

  Dataset ds;
  ds.seed = seed;
  ds.samples = Matrix(static_cast<std::size_t>(m), kSampleLength);
  ds.labels = Matrix(static_cast<std::size_t>(m), kNumClasses);
  for (int i = 0; i < m; ++i) {
    const bool is_faulty = i % 2 == 1;  // alternating keeps classes within one of balanced
    const auto signal = render_signal(is_faulty ? faulty : healthy,
                                      mix_seed(seed, static_cast<std::uint64_t>(i)));
    ds.samples.set_row(static_cast<std::size_t>(i), signal);
    ds.labels(static_cast<std::size_t>(i), is_faulty ? 1 : 0) = 1.0;
  }
  return ds;
}

Dataset split(Dataset dataset, int n_train, std::uint64_t seed) {
  const int m = static_cast<int>(dataset.samples.rows());
  if (n_train < 1 || n_train >= m)
    throw std::invalid_argument("n_train must be in [1, m), got " + std::to_string(n_train) +
                                " for m=" + std::to_string(m));
  Rng rng(seed);
  std::vector<int> train = rng.sample_distinct(m, n_train);
  std::sort(train.begin(), train.end());

  std::vector<char> in_train(static_cast<std::size_t>(m), 0);
  for (int i : train) in_train[static_cast<std::size_t>(i)] = 1;
  std::vector<int> test;
  test.reserve(static_cast<std::size_t>(m - n_train));
  for (int i = 0; i < m; ++i)
    if (!in_train[static_cast<std::size_t>(i)]) test.push_back(i);

  dataset.train_indices = std::move(train);
  dataset.test_indices = std::move(test);
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << dataset.samples.rows() << ' ' << kSampleLength << ' ' << kNumClasses << '\n';
  for (std::size_t r = 0; r < dataset.samples.rows(); ++r) {
    const auto label = dataset.labels.row(r);
    out << (label[1] > label[0] ? 1 : 0);
    const auto row = dataset.samples.row(r);
    for (double v : row) out << ' ' << textio::format_double(v);
    out << '\n';
  }
  if (!out.good()) throw std::runtime_error("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::size_t m = 0, length = 0, classes = 0;
  if (!(in >> m >> length >> classes) || length != kSampleLength || classes != kNumClasses)
    throw std::runtime_error(path.string() + ": malformed dataset header");
  Dataset ds;
  ds.samples = Matrix(m, kSampleLength);
  ds.labels = Matrix(m, kNumClasses);
  for (std::size_t r = 0; r < m; ++r) {
    int label = -1;
    if (!(in >> label) || label < 0 || label >= kNumClasses)
      throw std::runtime_error(path.string() + ": bad label on sample " + std::to_string(r));
    ds.labels(r, static_cast<std::size_t>(label)) = 1.0;
    for (std::size_t c = 0; c < kSampleLength; ++c)
      if (!(in >> ds.samples(r, c)))
        throw std::runtime_error(path.string() + ": truncated sample " + std::to_string(r));
  }
  return ds;
}

void save_split(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto dump = [&out](const std::vector<int>& idx) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i) out << ' ';
      out << idx[i];
    }
    out << '\n';
  };
  dump(dataset.train_indices);
  dump(dataset.test_indices);
  if (!out.good()) throw std::runtime_error("write failed: " + path.string());
}

void load_split(Dataset& dataset, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto parse_line = [&in, &path]() {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": truncated split file");
    std::istringstream row(line);
    std::vector<int> idx;
    int v = 0;
    while (row >> v) idx.push_back(v);
    return idx;
  };
  dataset.train_indices = parse_line();
  dataset.test_indices = parse_line();

  const int m = static_cast<int>(dataset.samples.rows());
  std::vector<char> seen(static_cast<std::size_t>(m), 0);
  const auto mark = [&seen, m, &path](const std::vector<int>& idx) {
    for (int i : idx) {
      if (i < 0 || i >= m || seen[static_cast<std::size_t>(i)])
        throw std::runtime_error(path.string() + ": split indices invalid for dataset");
      seen[static_cast<std::size_t>(i)] = 1;
    }
  };
  mark(dataset.train_indices);
  mark(dataset.test_indices);
  if (dataset.train_indices.size() + dataset.test_indices.size() != static_cast<std::size_t>(m))
    throw std::runtime_error(path.string() + ": split does not cover the dataset");
}

}  // namespace qfl::data
