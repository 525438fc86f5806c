#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qfl/matrix.hpp"
#include "qfl/qsim.hpp"

namespace qfl::ansatz {

/// Bumped whenever the template catalogue changes shape; stamped into bank
/// manifests so stale banks are detected.
inline constexpr int kCatalogueVersion = 1;

/// Position of a tunable rotation inside an expanded gate list.
struct ParamSlot {
  std::size_t gate_index = 0;
  qsim::GateKind kind = qsim::GateKind::RY;

  bool operator==(const ParamSlot&) const = default;
};

/// A circuit structure from the fixed catalogue, expanded for a concrete
/// qubit count and layer count. Rotation angles stay zero until bound.
struct CircuitTemplate {
  std::string template_id;
  int n_qubits = 0;
  int n_layers = 0;
  std::vector<qsim::GateOp> gates;
  std::vector<ParamSlot> param_slots;

  bool operator==(const CircuitTemplate&) const = default;
};

/// The eight catalogue identifiers, in stable order.
const std::vector<std::string>& catalogue_ids();

/// Expands one catalogue template. Throws std::invalid_argument for unknown
/// ids, qubit counts outside [1, 10], or n_layers < 1.
CircuitTemplate make_template(std::string_view template_id, int n_qubits, int n_layers);

/// The whole catalogue expanded at one size.
std::vector<CircuitTemplate> catalogue_templates(int n_qubits, int n_layers);

/// A template with its rotation angles fixed. Reproducible from
/// (template_id, n_qubits, n_layers, bind_seed).
struct BoundCircuit {
  CircuitTemplate tmpl;
  std::vector<double> params;
  std::uint64_t bind_seed = 0;

  int n_qubits() const { return tmpl.n_qubits; }

  /// Template gates with the bound angles filled into the parameter slots.
  std::vector<qsim::GateOp> gates() const;

  bool operator==(const BoundCircuit&) const = default;
};

/// Draws one parameter per slot, independently uniform on [0, 2*pi), from a
/// deterministic generator seeded by bind_seed.
BoundCircuit bind_random(const CircuitTemplate& tmpl, std::uint64_t bind_seed);

struct LayerRange {
  int min_layers = 1;
  int max_layers = 1;
};

/// Candidate circuits plus their distribution embeddings: row i of
/// `embeddings` is the computational-basis distribution of circuit i run on
/// the zero state.
struct CandidatePool {
  std::vector<BoundCircuit> circuits;
  Matrix embeddings;
  std::uint64_t master_seed = 0;
};

/// Exact basis distribution of one bound circuit applied to |0...0>.
std::vector<double> distribution_embedding(const BoundCircuit& circuit);

/// Builds a pool of `pool_size` bound circuits, cycling over every
/// (template, layer-count) cell before repeating, with per-slot bind seeds
/// derived from master_seed.
CandidatePool build_pool(int n_qubits, int pool_size, LayerRange layers,
                         std::uint64_t master_seed);

/// One-circuit-per-document serialization. The expanded gate list in the
/// record is authoritative on load; template metadata is advisory.
std::string circuit_to_record(const BoundCircuit& circuit);
BoundCircuit circuit_from_record(const std::string& record);

void save_circuit(const BoundCircuit& circuit, const std::filesystem::path& path);
BoundCircuit load_circuit(const std::filesystem::path& path);

}  // namespace qfl::ansatz
