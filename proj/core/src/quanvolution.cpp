#include "qfl/quanvolution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qfl::quanvolution {

int output_length(int n, int f, int s) {
  if (f < 1) throw std::invalid_argument("window must be >= 1, got " + std::to_string(f));
  if (s < 1) throw std::invalid_argument("stride must be >= 1, got " + std::to_string(s));
  if (n < f)
    throw std::invalid_argument("input length " + std::to_string(n) +
                                " is shorter than window " + std::to_string(f));
  return (n - f) / s + 1;
}

double AffineScale::angle(double x) const {
  if (!(hi > lo)) return 0.0;
  const double t = (x - lo) / (hi - lo) * std::numbers::pi;
  return std::clamp(t, 0.0, std::numbers::pi);
}

AffineScale fit_scale(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("fit_scale: no values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return AffineScale{*lo, *hi};
}

qsim::QuantumState encode_patch(std::span<const double> patch, const AffineScale& scale) {
  const int f = static_cast<int>(patch.size());
  qsim::QuantumState state = qsim::zero_state(f);
  for (int q = 0; q < f; ++q) state = qsim::apply_gate(state, qsim::ry(q, scale.angle(patch[static_cast<std::size_t>(q)])));
  return state;
}

double filter_response(std::span<const double> patch, const ansatz::BoundCircuit& filter,
                       const AffineScale& scale) {
  if (filter.n_qubits() != static_cast<int>(patch.size()))
    throw std::invalid_argument("filter acts on " + std::to_string(filter.n_qubits()) +
                                " qubits but the patch has " + std::to_string(patch.size()) +
                                " elements");
  const auto gates = filter.gates();
  const qsim::QuantumState out = qsim::run_circuit(encode_patch(patch, scale), gates);
  const double z = qsim::z_tensor_expectation(out);
  return std::numbers::pi * std::tanh(z);
}

FeatureMap quanvolve(const Signal& signal, const QuanvLayerConfig& config) {
  if (config.bank.filters.empty()) throw std::invalid_argument("quanvolve: empty filter bank");
  for (const auto& filter : config.bank.filters)
    if (filter.n_qubits() != config.window)
      throw std::invalid_argument("quanvolve: bank filter acts on " +
                                  std::to_string(filter.n_qubits()) + " qubits, window is " +
                                  std::to_string(config.window));
  const int in_len = static_cast<int>(signal.length());
  const int out_len = output_length(in_len, config.window, config.stride);
  const std::size_t n_filters = config.bank.filters.size();

  FeatureMap out;
  out.values = Matrix(signal.channels() * n_filters, static_cast<std::size_t>(out_len));
  for (std::size_t c = 0; c < signal.channels(); ++c) {
    const auto channel = signal.values.row(c);
    for (std::size_t k = 0; k < n_filters; ++k) {
      const auto row = out.values.row(c * n_filters + k);
      for (int p = 0; p < out_len; ++p) {
        const std::size_t start = static_cast<std::size_t>(p) * static_cast<std::size_t>(config.stride);
        row[static_cast<std::size_t>(p)] = filter_response(
            channel.subspan(start, static_cast<std::size_t>(config.window)),
            config.bank.filters[k], config.input_scale);
      }
    }
  }
  return out;
}

FeatureMap max_pool(const FeatureMap& map, int window, int stride) {
  const int out_len = output_length(static_cast<int>(map.length()), window, stride);
  FeatureMap out;
  out.values = Matrix(map.channels(), static_cast<std::size_t>(out_len));
  for (std::size_t c = 0; c < map.channels(); ++c) {
    const auto in_row = map.values.row(c);
    const auto out_row = out.values.row(c);
    for (int p = 0; p < out_len; ++p) {
      const std::size_t start = static_cast<std::size_t>(p) * static_cast<std::size_t>(stride);
      double best = in_row[start];
      for (int w = 1; w < window; ++w) best = std::max(best, in_row[start + static_cast<std::size_t>(w)]);
      out_row[static_cast<std::size_t>(p)] = best;
    }
  }
  return out;
}

std::vector<double> extract_hierarchy(const Signal& signal, std::span<const LevelSpec> levels) {
  FeatureMap current;
  current.values = signal.values;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const LevelSpec& level = levels[i];
    const std::string where = "level " + std::to_string(i + 1);
    if (level.quanv.window > static_cast<int>(current.length()))
      throw std::invalid_argument(where + ": window " + std::to_string(level.quanv.window) +
                                  " exceeds input length " + std::to_string(current.length()));
    current = quanvolve(Signal{current.values}, level.quanv);
    if (level.pool_window > static_cast<int>(current.length()))
      throw std::invalid_argument(where + ": pool window " + std::to_string(level.pool_window) +
                                  " exceeds map length " + std::to_string(current.length()));
    current = max_pool(current, level.pool_window, level.pool_stride);
  }
  const auto flat = current.values.data();
  return {flat.begin(), flat.end()};
}

}  // namespace qfl::quanvolution
