#pragma once

#include <span>
#include <vector>

#include "qfl/cluster.hpp"
#include "qfl/matrix.hpp"
#include "qfl/qsim.hpp"

namespace qfl::quanvolution {

/// Number of window positions for a length-N input, window f and stride s:
/// floor((N - f) / s) + 1. Throws std::invalid_argument when N < f, f < 1
/// or s < 1.
int output_length(int n, int f, int s);

/// Affine map from the data range [lo, hi] to rotation angles, clamped to
/// [0, pi]. A degenerate range maps everything to 0.
struct AffineScale {
  double lo = 0.0;
  double hi = 1.0;

  double angle(double x) const;

  bool operator==(const AffineScale&) const = default;
};

/// [lo, hi] from the extremes of the given values.
AffineScale fit_scale(std::span<const double> values);

/// Multi-channel 1-D signal, one row per channel.
struct Signal {
  Matrix values;

  std::size_t channels() const { return values.rows(); }
  std::size_t length() const { return values.cols(); }
};

/// Multi-channel activation map produced by quanvolution or pooling.
struct FeatureMap {
  Matrix values;

  std::size_t channels() const { return values.rows(); }
  std::size_t length() const { return values.cols(); }
};

struct QuanvLayerConfig {
  int window = 4;
  int stride = 2;
  cluster::FilterBank bank;   // filters on `window` qubits
  AffineScale input_scale;
};

/// Encodes a patch as one RY(scale(x_i)) rotation per qubit on |0...0>.
qsim::QuantumState encode_patch(std::span<const double> patch, const AffineScale& scale);

/// Scalar response of one filter on one patch: the Z-tensor expectation of
/// the filtered encoded state, pushed through pi*tanh. Lies in (-pi, pi).
double filter_response(std::span<const double> patch, const ansatz::BoundCircuit& filter,
                       const AffineScale& scale);

/// Slides the window over every input channel and applies every filter:
/// output channel c*K + k holds filter k's responses on input channel c.
FeatureMap quanvolve(const Signal& signal, const QuanvLayerConfig& config);

/// Per-channel sliding maximum with the same output-length rule.
FeatureMap max_pool(const FeatureMap& map, int window, int stride);

struct LevelSpec {
  QuanvLayerConfig quanv;
  int pool_window = 2;
  int pool_stride = 2;
};

/// Applies quanvolve then max_pool per level and flattens the final map
/// channel-major. Throws std::invalid_argument naming the level whose
/// geometry does not fit its input.
std::vector<double> extract_hierarchy(const Signal& signal, std::span<const LevelSpec> levels);

}  // namespace qfl::quanvolution
