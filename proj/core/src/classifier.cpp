#include "qfl/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "qfl/rng.hpp"
#include "qfl/textio.hpp"

namespace qfl::classifier {

namespace {

constexpr double kStdFloor = 1e-8;
constexpr double kProbFloor = 1e-12;

void check_aligned(const Matrix& x, const Matrix& y, const char* what) {
  if (x.rows() != y.rows())
    throw std::invalid_argument(std::string(what) + ": X has " + std::to_string(x.rows()) +
                                " rows, Y has " + std::to_string(y.rows()));
  if (y.cols() != kNumClasses)
    throw std::invalid_argument(std::string(what) + ": Y must have " +
                                std::to_string(kNumClasses) + " columns");
}

double relu(double v) { return v > 0.0 ? v : 0.0; }

struct ForwardTrace {
  std::vector<double> z1, a1, z2, a2;
  std::array<double, 2> logits{};
  std::array<double, 2> probs{};
};

void mat_vec(const Matrix& w, std::span<const double> x, const std::vector<double>& b,
             std::vector<double>& out) {
  out.resize(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto row = w.row(r);
    double acc = b[r];
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

std::array<double, 2> softmax(std::array<double, 2> logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

ForwardTrace forward_trace(const MlpModel& model, std::span<const double> x) {
  ForwardTrace t;
  mat_vec(model.w1, x, model.b1, t.z1);
  t.a1 = t.z1;
  for (double& v : t.a1) v = relu(v);
  mat_vec(model.w2, t.a1, model.b2, t.z2);
  t.a2 = t.z2;
  for (double& v : t.a2) v = relu(v);
  std::vector<double> z3;
  mat_vec(model.w3, t.a2, model.b3, z3);
  t.logits = {z3[0], z3[1]};
  t.probs = softmax(t.logits);
  return t;
}

double cross_entropy(const std::array<double, 2>& probs, std::span<const double> y) {
  double loss = 0.0;
  for (int c = 0; c < kNumClasses; ++c)
    loss -= y[static_cast<std::size_t>(c)] * std::log(std::max(probs[static_cast<std::size_t>(c)], kProbFloor));
  return loss;
}

int argmax2(double p0, double p1) { return p1 > p0 ? 1 : 0; }

}  // namespace

Matrix Normalizer::transform(const Matrix& x) const {
  if (x.cols() != mean.size())
    throw std::invalid_argument("Normalizer::transform: dimension mismatch");
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c)
      out(r, c) = (x(r, c) - mean[c]) / std_dev[c];
  return out;
}

Normalizer fit_normalizer(const Matrix& x_train) {
  const std::size_t m = x_train.rows();
  const std::size_t d = x_train.cols();
  if (m == 0) throw std::invalid_argument("fit_normalizer: empty input");

  Normalizer norm;
  norm.mean.assign(d, 0.0);
  norm.std_dev.assign(d, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < d; ++c) norm.mean[c] += x_train(r, c);
  for (double& v : norm.mean) v /= static_cast<double>(m);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const double delta = x_train(r, c) - norm.mean[c];
      norm.std_dev[c] += delta * delta;
    }
  for (double& v : norm.std_dev) v = std::max(std::sqrt(v / static_cast<double>(m)), kStdFloor);
  return norm;
}

void save_normalizer(const Normalizer& norm, const std::filesystem::path& path) {
  Matrix m(2, norm.mean.size());
  m.set_row(0, norm.mean);
  m.set_row(1, norm.std_dev);
  textio::write_matrix_file(path, m);
}

Normalizer load_normalizer(const std::filesystem::path& path) {
  const Matrix m = textio::read_matrix_file(path);
  if (m.rows() != 2) throw std::runtime_error(path.string() + ": malformed normalizer");
  Normalizer norm;
  norm.mean.assign(m.row(0).begin(), m.row(0).end());
  norm.std_dev.assign(m.row(1).begin(), m.row(1).end());
  return norm;
}

MlpModel init_model(int d_in, int h1, int h2, std::uint64_t seed) {
  if (d_in < 1 || h1 < 1 || h2 < 1)
    throw std::invalid_argument("init_model: layer sizes must be positive");
  MlpModel model;
  model.d_in = d_in;
  model.h1 = h1;
  model.h2 = h2;
  model.w1 = Matrix(static_cast<std::size_t>(h1), static_cast<std::size_t>(d_in));
  model.w2 = Matrix(static_cast<std::size_t>(h2), static_cast<std::size_t>(h1));
  model.w3 = Matrix(kNumClasses, static_cast<std::size_t>(h2));
  model.b1.assign(static_cast<std::size_t>(h1), 0.0);
  model.b2.assign(static_cast<std::size_t>(h2), 0.0);
  model.b3.assign(kNumClasses, 0.0);

  Rng rng(seed);
  const auto fill = [&rng](Matrix& w, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w.data()) v = rng.uniform(-limit, limit);
  };
  fill(model.w1, d_in, h1);
  fill(model.w2, h1, h2);
  fill(model.w3, h2, kNumClasses);
  return model;
}

std::array<double, 2> forward(const MlpModel& model, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(model.d_in))
    throw std::invalid_argument("forward: input has " + std::to_string(x.size()) +
                                " features, model expects " + std::to_string(model.d_in));
  return forward_trace(model, x).probs;
}

Gradients compute_gradients(const MlpModel& model, const Matrix& x_batch, const Matrix& y_batch) {
  check_aligned(x_batch, y_batch, "compute_gradients");
  const std::size_t m = x_batch.rows();
  if (m == 0) throw std::invalid_argument("compute_gradients: empty batch");

  Gradients g;
  g.w1 = Matrix(model.w1.rows(), model.w1.cols());
  g.w2 = Matrix(model.w2.rows(), model.w2.cols());
  g.w3 = Matrix(model.w3.rows(), model.w3.cols());
  g.b1.assign(model.b1.size(), 0.0);
  g.b2.assign(model.b2.size(), 0.0);
  g.b3.assign(model.b3.size(), 0.0);

  std::vector<double> dz2(model.b2.size());
  std::vector<double> dz1(model.b1.size());
  for (std::size_t s = 0; s < m; ++s) {
    const auto x = x_batch.row(s);
    const auto y = y_batch.row(s);
    const ForwardTrace t = forward_trace(model, x);

    // softmax + cross-entropy collapses to probs - y at the logits
    const std::array<double, 2> dz3 = {t.probs[0] - y[0], t.probs[1] - y[1]};
    for (int c = 0; c < kNumClasses; ++c) {
      g.b3[static_cast<std::size_t>(c)] += dz3[static_cast<std::size_t>(c)];
      const auto grow = g.w3.row(static_cast<std::size_t>(c));
      for (std::size_t j = 0; j < t.a2.size(); ++j) grow[j] += dz3[static_cast<std::size_t>(c)] * t.a2[j];
    }

    for (std::size_t j = 0; j < dz2.size(); ++j) {
      double acc = 0.0;
      for (int c = 0; c < kNumClasses; ++c) acc += model.w3(static_cast<std::size_t>(c), j) * dz3[static_cast<std::size_t>(c)];
      dz2[j] = t.z2[j] > 0.0 ? acc : 0.0;
    }
    for (std::size_t j = 0; j < dz2.size(); ++j) {
      g.b2[j] += dz2[j];
      const auto grow = g.w2.row(j);
      for (std::size_t i = 0; i < t.a1.size(); ++i) grow[i] += dz2[j] * t.a1[i];
    }

    for (std::size_t i = 0; i < dz1.size(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < dz2.size(); ++j) acc += model.w2(j, i) * dz2[j];
      dz1[i] = t.z1[i] > 0.0 ? acc : 0.0;
    }
    for (std::size_t i = 0; i < dz1.size(); ++i) {
      g.b1[i] += dz1[i];
      const auto grow = g.w1.row(i);
      for (std::size_t c = 0; c < x.size(); ++c) grow[c] += dz1[i] * x[c];
    }
  }

  const double inv = 1.0 / static_cast<double>(m);
  for (double& v : g.w1.data()) v *= inv;
  for (double& v : g.w2.data()) v *= inv;
  for (double& v : g.w3.data()) v *= inv;
  for (double& v : g.b1) v *= inv;
  for (double& v : g.b2) v *= inv;
  for (double& v : g.b3) v *= inv;
  return g;
}

double batch_loss(const MlpModel& model, const Matrix& x, const Matrix& y) {
  check_aligned(x, y, "batch_loss");
  double loss = 0.0;
  for (std::size_t s = 0; s < x.rows(); ++s)
    loss += cross_entropy(forward_trace(model, x.row(s)).probs, y.row(s));
  return loss / static_cast<double>(x.rows());
}

TrainResult train(const Matrix& x, const Matrix& y_one_hot, const TrainConfig& cfg, int hidden1,
                  int hidden2, const Matrix* x_test, const Matrix* y_test) {
  check_aligned(x, y_one_hot, "train");
  if (x.rows() == 0) throw std::invalid_argument("train: empty training set");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (cfg.learning_rate < 0.0) throw std::invalid_argument("train: learning_rate must be >= 0");
  for (std::size_t r = 0; r < y_one_hot.rows(); ++r) {
    const auto row = y_one_hot.row(r);
    const bool one_hot = (row[0] == 0.0 || row[0] == 1.0) && row[0] + row[1] == 1.0;
    if (!one_hot) throw std::invalid_argument("train: labels must be one-hot rows");
  }
  if ((x_test == nullptr) != (y_test == nullptr))
    throw std::invalid_argument("train: test features and labels must come together");
  if (x_test) check_aligned(*x_test, *y_test, "train (test split)");

  TrainResult result;
  result.model = init_model(static_cast<int>(x.cols()), hidden1, hidden2, mix_seed(cfg.seed, 0));
  Rng shuffle_rng(mix_seed(cfg.seed, 1));

  const std::size_t m = x.rows();
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < m; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t count = std::min(static_cast<std::size_t>(cfg.batch_size), m - start);
      Matrix xb(count, x.cols());
      Matrix yb(count, kNumClasses);
      for (std::size_t i = 0; i < count; ++i) {
        xb.set_row(i, x.row(static_cast<std::size_t>(order[start + i])));
        yb.set_row(i, y_one_hot.row(static_cast<std::size_t>(order[start + i])));
      }
      const Gradients g = compute_gradients(result.model, xb, yb);
      const double lr = cfg.learning_rate;
      for (std::size_t i = 0; i < g.w1.data().size(); ++i) result.model.w1.data()[i] -= lr * g.w1.data()[i];
      for (std::size_t i = 0; i < g.w2.data().size(); ++i) result.model.w2.data()[i] -= lr * g.w2.data()[i];
      for (std::size_t i = 0; i < g.w3.data().size(); ++i) result.model.w3.data()[i] -= lr * g.w3.data()[i];
      for (std::size_t i = 0; i < g.b1.size(); ++i) result.model.b1[i] -= lr * g.b1[i];
      for (std::size_t i = 0; i < g.b2.size(); ++i) result.model.b2[i] -= lr * g.b2[i];
      for (std::size_t i = 0; i < g.b3.size(); ++i) result.model.b3[i] -= lr * g.b3[i];
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    const Evaluation train_eval = evaluate(result.model, x, y_one_hot);
    metrics.train_loss = train_eval.loss;
    metrics.train_accuracy = train_eval.accuracy;
    if (x_test) {
      const Evaluation test_eval = evaluate(result.model, *x_test, *y_test);
      metrics.test_loss = test_eval.loss;
      metrics.test_accuracy = test_eval.accuracy;
    }
    result.history.push_back(metrics);
  }
  return result;
}

Evaluation evaluate(const MlpModel& model, const Matrix& x, const Matrix& y_one_hot) {
  check_aligned(x, y_one_hot, "evaluate");
  if (x.rows() == 0) throw std::invalid_argument("evaluate: empty input");
  Evaluation eval;
  std::size_t correct = 0;
  for (std::size_t s = 0; s < x.rows(); ++s) {
    const auto y = y_one_hot.row(s);
    const ForwardTrace t = forward_trace(model, x.row(s));
    eval.loss += cross_entropy(t.probs, y);
    if (argmax2(t.probs[0], t.probs[1]) == argmax2(y[0], y[1])) ++correct;
  }
  eval.loss /= static_cast<double>(x.rows());
  eval.accuracy = static_cast<double>(correct) / static_cast<double>(x.rows());
  return eval;
}

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << model.d_in << ' ' << model.h1 << ' ' << model.h2 << ' ' << kNumClasses << '\n';
  const auto dump_matrix = [&out](const Matrix& w) {
    for (std::size_t r = 0; r < w.rows(); ++r) {
      for (std::size_t c = 0; c < w.cols(); ++c) {
        if (c) out << ' ';
        out << textio::format_double(w(r, c));
      }
      out << '\n';
    }
  };
  const auto dump_vector = [&out](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << ' ';
      out << textio::format_double(v[i]);
    }
    out << '\n';
  };
  dump_matrix(model.w1);
  dump_vector(model.b1);
  dump_matrix(model.w2);
  dump_vector(model.b2);
  dump_matrix(model.w3);
  dump_vector(model.b3);
  if (!out.good()) throw std::runtime_error("write failed: " + path.string());
}

MlpModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  int d_in = 0, h1 = 0, h2 = 0, classes = 0;
  if (!(in >> d_in >> h1 >> h2 >> classes) || classes != kNumClasses)
    throw std::runtime_error(path.string() + ": malformed checkpoint header");
  MlpModel model;
  model.d_in = d_in;
  model.h1 = h1;
  model.h2 = h2;
  const auto read_matrix = [&in, &path](std::size_t rows, std::size_t cols) {
    Matrix w(rows, cols);
    for (double& v : w.data())
      if (!(in >> v)) throw std::runtime_error(path.string() + ": truncated checkpoint");
    return w;
  };
  const auto read_vector = [&in, &path](std::size_t n) {
    std::vector<double> v(n);
    for (double& e : v)
      if (!(in >> e)) throw std::runtime_error(path.string() + ": truncated checkpoint");
    return v;
  };
  model.w1 = read_matrix(static_cast<std::size_t>(h1), static_cast<std::size_t>(d_in));
  model.b1 = read_vector(static_cast<std::size_t>(h1));
  model.w2 = read_matrix(static_cast<std::size_t>(h2), static_cast<std::size_t>(h1));
  model.b2 = read_vector(static_cast<std::size_t>(h2));
  model.w3 = read_matrix(kNumClasses, static_cast<std::size_t>(h2));
  model.b3 = read_vector(kNumClasses);
  return model;
}

void write_metrics_csv(std::span<const EpochMetrics> history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "epoch,train_loss,train_acc,test_loss,test_acc\n";
  for (const EpochMetrics& row : history) {
    out << row.epoch << ',' << textio::format_double(row.train_loss) << ','
        << textio::format_double(row.train_accuracy) << ',';
    out << (row.test_loss ? textio::format_double(*row.test_loss) : "") << ',';
    out << (row.test_accuracy ? textio::format_double(*row.test_accuracy) : "") << '\n';
  }
  if (!out.good()) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace qfl::classifier
