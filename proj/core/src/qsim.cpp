#include "qfl/qsim.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qfl::qsim {

namespace {

std::atomic<std::uint64_t> g_circuit_evaluations{0};

using cplx = std::complex<double>;

struct Mat2 {
  cplx m00, m01, m10, m11;
};

Mat2 local_matrix(GateKind kind, double angle) {
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  switch (kind) {
    case GateKind::RX:
    case GateKind::CRX:
      return {cplx(c, 0), cplx(0, -s), cplx(0, -s), cplx(c, 0)};
    case GateKind::RY:
    case GateKind::CRY:
      return {cplx(c, 0), cplx(-s, 0), cplx(s, 0), cplx(c, 0)};
    case GateKind::RZ:
    case GateKind::CRZ:
      return {cplx(c, -s), cplx(0, 0), cplx(0, 0), cplx(c, s)};
    case GateKind::H: {
      const double inv = 1.0 / std::numbers::sqrt2;
      return {cplx(inv, 0), cplx(inv, 0), cplx(inv, 0), cplx(-inv, 0)};
    }
    case GateKind::CNOT:
      return {cplx(0, 0), cplx(1, 0), cplx(1, 0), cplx(0, 0)};
    case GateKind::CZ:
      return {cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(-1, 0)};
  }
  throw std::logic_error("unreachable gate kind");
}

// 2x2 on one qubit; qubit q maps to bit (n-1-q) of the basis index.
void apply_single(std::vector<cplx>& a, int n, int q, const Mat2& m) {
  const std::size_t half = std::size_t{1} << (n - 1 - q);
  const std::size_t dim = a.size();
  for (std::size_t base = 0; base < dim; base += half * 2) {
    for (std::size_t i = base; i < base + half; ++i) {
      const cplx a0 = a[i];
      const cplx a1 = a[i + half];
      a[i] = m.m00 * a0 + m.m01 * a1;
      a[i + half] = m.m10 * a0 + m.m11 * a1;
    }
  }
}

// 2x2 on the target, restricted to basis states where the control bit is set.
void apply_controlled(std::vector<cplx>& a, int n, int control, int target, const Mat2& m) {
  const std::size_t cbit = std::size_t{1} << (n - 1 - control);
  const std::size_t tbit = std::size_t{1} << (n - 1 - target);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((i & cbit) && !(i & tbit)) {
      const cplx a0 = a[i];
      const cplx a1 = a[i | tbit];
      a[i] = m.m00 * a0 + m.m01 * a1;
      a[i | tbit] = m.m10 * a0 + m.m11 * a1;
    }
  }
}

void validate_gate(const GateOp& gate, int n_qubits) {
  const std::size_t expected = is_two_qubit(gate.kind) ? 2 : 1;
  if (gate.targets.size() != expected)
    throw std::invalid_argument(std::string(to_string(gate.kind)) + ": expected " +
                                std::to_string(expected) + " target(s), got " +
                                std::to_string(gate.targets.size()));
  for (int q : gate.targets)
    if (q < 0 || q >= n_qubits)
      throw std::invalid_argument(std::string(to_string(gate.kind)) + ": qubit index " +
                                  std::to_string(q) + " out of range for " +
                                  std::to_string(n_qubits) + " qubits");
  if (expected == 2 && gate.targets[0] == gate.targets[1])
    throw std::invalid_argument(std::string(to_string(gate.kind)) + ": duplicate qubit index " +
                                std::to_string(gate.targets[0]));
  if (is_rotation(gate.kind) && !std::isfinite(gate.angle))
    throw std::invalid_argument(std::string(to_string(gate.kind)) + ": non-finite angle");
}

void apply_in_place(std::vector<cplx>& amplitudes, int n_qubits, const GateOp& gate) {
  const Mat2 m = local_matrix(gate.kind, gate.angle);
  if (is_two_qubit(gate.kind))
    apply_controlled(amplitudes, n_qubits, gate.targets[0], gate.targets[1], m);
  else
    apply_single(amplitudes, n_qubits, gate.targets[0], m);
}

}  // namespace

bool is_rotation(GateKind kind) {
  switch (kind) {
    case GateKind::RX:
    case GateKind::RY:
    case GateKind::RZ:
    case GateKind::CRX:
    case GateKind::CRY:
    case GateKind::CRZ:
      return true;
    default:
      return false;
  }
}

bool is_two_qubit(GateKind kind) {
  switch (kind) {
    case GateKind::CNOT:
    case GateKind::CZ:
    case GateKind::CRX:
    case GateKind::CRY:
    case GateKind::CRZ:
      return true;
    default:
      return false;
  }
}

std::string_view to_string(GateKind kind) {
  switch (kind) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::H: return "H";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CZ: return "CZ";
    case GateKind::CRX: return "CRX";
    case GateKind::CRY: return "CRY";
    case GateKind::CRZ: return "CRZ";
  }
  return "?";
}

GateKind gate_kind_from_string(std::string_view name) {
  if (name == "RX") return GateKind::RX;
  if (name == "RY") return GateKind::RY;
  if (name == "RZ") return GateKind::RZ;
  if (name == "H") return GateKind::H;
  if (name == "CNOT") return GateKind::CNOT;
  if (name == "CZ") return GateKind::CZ;
  if (name == "CRX") return GateKind::CRX;
  if (name == "CRY") return GateKind::CRY;
  if (name == "CRZ") return GateKind::CRZ;
  throw std::invalid_argument("unknown gate kind: " + std::string(name));
}

GateOp rx(int qubit, double angle) { return {GateKind::RX, {qubit}, angle}; }
GateOp ry(int qubit, double angle) { return {GateKind::RY, {qubit}, angle}; }
GateOp rz(int qubit, double angle) { return {GateKind::RZ, {qubit}, angle}; }
GateOp h(int qubit) { return {GateKind::H, {qubit}, 0.0}; }
GateOp cnot(int control, int target) { return {GateKind::CNOT, {control, target}, 0.0}; }
GateOp cz(int a, int b) { return {GateKind::CZ, {a, b}, 0.0}; }
GateOp crx(int control, int target, double angle) { return {GateKind::CRX, {control, target}, angle}; }
GateOp cry(int control, int target, double angle) { return {GateKind::CRY, {control, target}, angle}; }
GateOp crz(int control, int target, double angle) { return {GateKind::CRZ, {control, target}, angle}; }

QuantumState QuantumState::zero(int n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits)
    throw std::invalid_argument("qubit count must be in [1, " + std::to_string(kMaxQubits) +
                                "], got " + std::to_string(n_qubits));
  std::vector<cplx> amps(std::size_t{1} << n_qubits, cplx(0, 0));
  amps[0] = cplx(1, 0);
  return QuantumState(n_qubits, std::move(amps));
}

QuantumState QuantumState::from_amplitudes(std::vector<cplx> amplitudes) {
  const std::size_t dim = amplitudes.size();
  if (dim < 2 || !std::has_single_bit(dim) || dim > (std::size_t{1} << kMaxQubits))
    throw std::invalid_argument("amplitude vector length must be 2^n with n in [1, 10]");
  const int n = std::countr_zero(dim);
  double norm2 = 0.0;
  for (const cplx& a : amplitudes) norm2 += std::norm(a);
  if (std::abs(norm2 - 1.0) > 1e-9)
    throw std::invalid_argument("amplitudes are not normalized");
  return QuantumState(n, std::move(amplitudes));
}

double QuantumState::norm() const {
  double norm2 = 0.0;
  for (const cplx& a : amplitudes_) norm2 += std::norm(a);
  return std::sqrt(norm2);
}

QuantumState zero_state(int n_qubits) { return QuantumState::zero(n_qubits); }

QuantumState apply_gate(const QuantumState& state, const GateOp& gate) {
  validate_gate(gate, state.n_qubits());
  std::vector<cplx> amps(state.amplitudes_.begin(), state.amplitudes_.end());
  apply_in_place(amps, state.n_qubits(), gate);
  return QuantumState(state.n_qubits(), std::move(amps));
}

QuantumState run_circuit(const QuantumState& init, std::span<const GateOp> gates) {
  for (const GateOp& g : gates) validate_gate(g, init.n_qubits());
  std::vector<cplx> amps(init.amplitudes_.begin(), init.amplitudes_.end());
  for (const GateOp& g : gates) apply_in_place(amps, init.n_qubits(), g);
  g_circuit_evaluations.fetch_add(1, std::memory_order_relaxed);
  return QuantumState(init.n_qubits(), std::move(amps));
}

std::vector<double> basis_distribution(const QuantumState& state) {
  std::vector<double> probs(state.dim());
  const auto amps = state.amplitudes();
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::norm(amps[i]);
  return probs;
}

double z_tensor_expectation(const QuantumState& state) {
  const auto amps = state.amplitudes();
  double value = 0.0;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double p = std::norm(amps[i]);
    value += (std::popcount(i) % 2 == 0) ? p : -p;
  }
  return value;
}

std::uint64_t circuit_evaluations() {
  return g_circuit_evaluations.load(std::memory_order_relaxed);
}

void reset_circuit_evaluations() {
  g_circuit_evaluations.store(0, std::memory_order_relaxed);
}

}  // namespace qfl::qsim
