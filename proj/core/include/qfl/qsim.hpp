#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace qfl::qsim {

/// Hard cap on register width; guards accidental exponential blowup.
inline constexpr int kMaxQubits = 10;

enum class GateKind { RX, RY, RZ, H, CNOT, CZ, CRX, CRY, CRZ };

/// Kinds that carry a rotation angle.
bool is_rotation(GateKind kind);
/// Kinds acting on two qubits (first target is the control).
bool is_two_qubit(GateKind kind);

std::string_view to_string(GateKind kind);
GateKind gate_kind_from_string(std::string_view name);

/// One gate in a circuit. `targets` holds one qubit index for single-qubit
/// kinds and {control, target} for two-qubit kinds; `angle` is meaningful
/// only for rotation kinds and stays zero otherwise.
struct GateOp {
  GateKind kind = GateKind::RY;
  std::vector<int> targets;
  double angle = 0.0;

  bool operator==(const GateOp&) const = default;
};

GateOp rx(int qubit, double angle);
GateOp ry(int qubit, double angle);
GateOp rz(int qubit, double angle);
GateOp h(int qubit);
GateOp cnot(int control, int target);
GateOp cz(int a, int b);
GateOp crx(int control, int target, double angle);
GateOp cry(int control, int target, double angle);
GateOp crz(int control, int target, double angle);

/// Pure state of an n-qubit register as a complex amplitude vector of length
/// 2^n. Qubit 0 is the most significant bit of the basis index. Values are
/// immutable after construction; all operations return new states.
class QuantumState {
public:
  static QuantumState zero(int n_qubits);

  /// Builds a state from explicit amplitudes. The length must be a power of
  /// two in [2, 2^10] and the squared-magnitude sum must be 1 within 1e-9.
  static QuantumState from_amplitudes(std::vector<std::complex<double>> amplitudes);

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return amplitudes_.size(); }
  std::span<const std::complex<double>> amplitudes() const { return amplitudes_; }

  /// Euclidean norm of the amplitude vector (1 within 1e-9 by invariant).
  double norm() const;

private:
  QuantumState(int n_qubits, std::vector<std::complex<double>> amplitudes)
      : n_qubits_(n_qubits), amplitudes_(std::move(amplitudes)) {}

  friend QuantumState apply_gate(const QuantumState&, const GateOp&);
  friend QuantumState run_circuit(const QuantumState&, std::span<const GateOp>);

  int n_qubits_;
  std::vector<std::complex<double>> amplitudes_;
};

/// |0...0> on n_qubits. Throws std::invalid_argument outside [1, 10].
QuantumState zero_state(int n_qubits);

/// Applies one gate and returns the resulting state. Throws
/// std::invalid_argument on malformed gates or out-of-range qubit indices.
QuantumState apply_gate(const QuantumState& state, const GateOp& gate);

/// Applies gates in list order; the empty list returns the input unchanged.
QuantumState run_circuit(const QuantumState& init, std::span<const GateOp> gates);

/// Computational-basis distribution: entry i is |amplitude_i|^2.
std::vector<double> basis_distribution(const QuantumState& state);

/// Expectation of the n-fold Pauli-Z tensor product: sum of parity(i) *
/// |amplitude_i|^2, +1 for even popcount and -1 for odd. Result in [-1, 1].
double z_tensor_expectation(const QuantumState& state);

/// Number of run_circuit calls completed since process start or the last
/// reset. Lets callers prove a code path performs no circuit evaluation.
std::uint64_t circuit_evaluations();
void reset_circuit_evaluations();

}  // namespace qfl::qsim
