#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "qfl/matrix.hpp"

namespace qfl::data {

inline constexpr int kSampleLength = 192;
inline constexpr int kNumClasses = 2;

/// How to synthesize one class of vibration signal: carrier sinusoids with
/// random phases plus Gaussian noise, and for the faulty class a periodic
/// train of exponentially decaying impulses with a jittered start.
struct SignalRecipe {
  bool faulty = false;
  std::vector<double> base_frequencies;  // cycles per 192-sample window
  double noise_std = 0.0;
  int impulse_period = 0;        // samples between impulse onsets (faulty only)
  double impulse_amplitude = 0.0;
  double impulse_decay = 0.0;    // per-sample multiplicative decay
};

SignalRecipe default_healthy_recipe();
SignalRecipe default_faulty_recipe();

/// One sample rendered from a recipe, deterministic per sample_seed.
std::vector<double> render_signal(const SignalRecipe& recipe, std::uint64_t sample_seed);

struct Dataset {
  Matrix samples;  // m x 192
  Matrix labels;   // m x 2, one-hot; class 0 = healthy, class 1 = faulty
  std::uint64_t seed = 0;
  std::vector<int> train_indices;
  std::vector<int> test_indices;
};

/// m samples with classes alternating healthy/faulty (so counts stay within
/// one of balanced), each rendered from a per-sample derived seed.
Dataset generate_dataset(const SignalRecipe& healthy, const SignalRecipe& faulty, int m,
                         std::uint64_t seed);

/// Uniformly random train subset of size n_train, remainder as test; both
/// index lists come back sorted. Deterministic per seed.
Dataset split(Dataset dataset, int n_train, std::uint64_t seed);

/// Dataset file: "m length n_classes" header, then one line per sample with
/// the label index followed by the 192 values.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// Split file: two lines of space-separated indices (train, then test).
void save_split(const Dataset& dataset, const std::filesystem::path& path);
void load_split(Dataset& dataset, const std::filesystem::path& path);

}  // namespace qfl::data
