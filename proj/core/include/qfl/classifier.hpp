#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "qfl/matrix.hpp"

namespace qfl::classifier {

inline constexpr int kNumClasses = 2;

/// Per-feature z-score fitted on the training split only.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> std_dev;  // floored at 1e-8

  Matrix transform(const Matrix& x) const;
};

Normalizer fit_normalizer(const Matrix& x_train);

void save_normalizer(const Normalizer& norm, const std::filesystem::path& path);
Normalizer load_normalizer(const std::filesystem::path& path);

/// Three weight layers: two rectified hidden layers and a softmax output
/// over two classes.
struct MlpModel {
  int d_in = 0;
  int h1 = 0;
  int h2 = 0;
  Matrix w1;  // h1 x d_in
  Matrix w2;  // h2 x h1
  Matrix w3;  // 2 x h2
  std::vector<double> b1, b2, b3;

  bool operator==(const MlpModel&) const = default;
};

/// Uniform Glorot initialization for the weights, zero biases.
MlpModel init_model(int d_in, int h1, int h2, std::uint64_t seed);

/// softmax(W3 relu(W2 relu(W1 x + b1) + b2) + b3); entries sum to 1.
std::array<double, 2> forward(const MlpModel& model, std::span<const double> x);

struct TrainConfig {
  int batch_size = 32;
  int epochs = 25;
  double learning_rate = 0.001;
  std::uint64_t seed = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> test_loss;
  std::optional<double> test_accuracy;
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochMetrics> history;
};

/// Mini-batch SGD on mean cross-entropy: per epoch, shuffle, walk the
/// batches, take plain gradient steps, then evaluate on the full training
/// split (and the optional held-out split). Deterministic given cfg.seed.
TrainResult train(const Matrix& x, const Matrix& y_one_hot, const TrainConfig& cfg,
                  int hidden1 = 64, int hidden2 = 32, const Matrix* x_test = nullptr,
                  const Matrix* y_test = nullptr);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and argmax accuracy; prediction ties go to class 0.
Evaluation evaluate(const MlpModel& model, const Matrix& x, const Matrix& y_one_hot);

/// Gradients of the mean cross-entropy over a batch; shapes mirror the model.
struct Gradients {
  Matrix w1, w2, w3;
  std::vector<double> b1, b2, b3;
};

Gradients compute_gradients(const MlpModel& model, const Matrix& x_batch,
                            const Matrix& y_batch);

/// Mean cross-entropy of the model on (x, y); the finite-difference oracle
/// in the tests drives this.
double batch_loss(const MlpModel& model, const Matrix& x, const Matrix& y);

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_checkpoint(const std::filesystem::path& path);

/// Header row then one comma-separated row per epoch:
/// epoch,train_loss,train_acc,test_loss,test_acc.
void write_metrics_csv(std::span<const EpochMetrics> history, const std::filesystem::path& path);

}  // namespace qfl::classifier
