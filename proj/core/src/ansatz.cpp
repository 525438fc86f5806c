#include "qfl/ansatz.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

#include "qfl/rng.hpp"
#include "qfl/textio.hpp"

namespace qfl::ansatz {

namespace {

using qsim::GateKind;
using qsim::GateOp;

std::vector<std::pair<int, int>> ring_pairs(int n) {
  if (n <= 1) return {};
  if (n == 2) return {{0, 1}};
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) pairs.emplace_back(i, (i + 1) % n);
  return pairs;
}

std::vector<std::pair<int, int>> chain_pairs(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
  return pairs;
}

std::vector<std::pair<int, int>> all_pairs(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  return pairs;
}

struct TemplateBuilder {
  std::vector<GateOp> gates;
  std::vector<ParamSlot> slots;

  void rot(GateKind kind, int q) {
    slots.push_back({gates.size(), kind});
    gates.push_back({kind, {q}, 0.0});
  }
  void rot2(GateKind kind, int control, int target) {
    slots.push_back({gates.size(), kind});
    gates.push_back({kind, {control, target}, 0.0});
  }
  void fixed(GateOp g) { gates.push_back(std::move(g)); }
};

void append_layer(std::string_view id, int n, TemplateBuilder& b) {
  if (id == "ry_only") {
    for (int q = 0; q < n; ++q) b.rot(GateKind::RY, q);
  } else if (id == "ry_ring_cnot") {
    for (int q = 0; q < n; ++q) b.rot(GateKind::RY, q);
    for (auto [a, t] : ring_pairs(n)) b.fixed(qsim::cnot(a, t));
  } else if (id == "rx_rz_chain_cz") {
    for (int q = 0; q < n; ++q) b.rot(GateKind::RX, q);
    for (int q = 0; q < n; ++q) b.rot(GateKind::RZ, q);
    for (auto [a, t] : chain_pairs(n)) b.fixed(qsim::cz(a, t));
  } else if (id == "h_cry_chain") {
    for (int q = 0; q < n; ++q) b.fixed(qsim::h(q));
    for (auto [a, t] : chain_pairs(n)) b.rot2(GateKind::CRY, a, t);
  } else if (id == "ry_full_cz") {
    for (int q = 0; q < n; ++q) b.rot(GateKind::RY, q);
    for (auto [a, t] : all_pairs(n)) b.fixed(qsim::cz(a, t));
  } else if (id == "rx_ry_ring_crx") {
    for (int q = 0; q < n; ++q) b.rot(GateKind::RX, q);
    for (int q = 0; q < n; ++q) b.rot(GateKind::RY, q);
    for (auto [a, t] : ring_pairs(n)) b.rot2(GateKind::CRX, a, t);
  } else if (id == "rz_ry_chain_cnot") {
    for (int q = 0; q < n; ++q) b.rot(GateKind::RZ, q);
    for (int q = 0; q < n; ++q) b.rot(GateKind::RY, q);
    for (auto [a, t] : chain_pairs(n)) b.fixed(qsim::cnot(a, t));
  } else if (id == "ry_rz_alternating_cz") {
    for (int q = 0; q < n; ++q) b.rot(q % 2 == 0 ? GateKind::RY : GateKind::RZ, q);
    for (auto [a, t] : ring_pairs(n)) b.fixed(qsim::cz(a, t));
  } else {
    throw std::invalid_argument("unknown template id: " + std::string(id));
  }
}

}  // namespace

const std::vector<std::string>& catalogue_ids() {
  static const std::vector<std::string> ids = {
      "ry_only",        "ry_ring_cnot",    "rx_rz_chain_cz",   "h_cry_chain",
      "ry_full_cz",     "rx_ry_ring_crx",  "rz_ry_chain_cnot", "ry_rz_alternating_cz",
  };
  return ids;
}

CircuitTemplate make_template(std::string_view template_id, int n_qubits, int n_layers) {
  if (n_qubits < 1 || n_qubits > qsim::kMaxQubits)
    throw std::invalid_argument("template qubit count must be in [1, 10], got " +
                                std::to_string(n_qubits));
  if (n_layers < 1)
    throw std::invalid_argument("template layer count must be positive, got " +
                                std::to_string(n_layers));
  TemplateBuilder b;
  for (int layer = 0; layer < n_layers; ++layer) append_layer(template_id, n_qubits, b);
  CircuitTemplate tmpl;
  tmpl.template_id = std::string(template_id);
  tmpl.n_qubits = n_qubits;
  tmpl.n_layers = n_layers;
  tmpl.gates = std::move(b.gates);
  tmpl.param_slots = std::move(b.slots);
  return tmpl;
}

std::vector<CircuitTemplate> catalogue_templates(int n_qubits, int n_layers) {
  std::vector<CircuitTemplate> out;
  out.reserve(catalogue_ids().size());
  for (const std::string& id : catalogue_ids()) out.push_back(make_template(id, n_qubits, n_layers));
  return out;
}

std::vector<qsim::GateOp> BoundCircuit::gates() const {
  std::vector<qsim::GateOp> out = tmpl.gates;
  for (std::size_t i = 0; i < tmpl.param_slots.size(); ++i)
    out[tmpl.param_slots[i].gate_index].angle = params[i];
  return out;
}

BoundCircuit bind_random(const CircuitTemplate& tmpl, std::uint64_t bind_seed) {
  Rng rng(bind_seed);
  std::vector<double> params(tmpl.param_slots.size());
  for (double& p : params) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return BoundCircuit{tmpl, std::move(params), bind_seed};
}

std::vector<double> distribution_embedding(const BoundCircuit& circuit) {
  const auto gates = circuit.gates();
  return qsim::basis_distribution(
      qsim::run_circuit(qsim::zero_state(circuit.n_qubits()), gates));
}

CandidatePool build_pool(int n_qubits, int pool_size, LayerRange layers,
                         std::uint64_t master_seed) {
  if (pool_size < 1) throw std::invalid_argument("pool_size must be >= 1");
  if (layers.min_layers < 1 || layers.max_layers < layers.min_layers)
    throw std::invalid_argument("layer range must satisfy 1 <= min <= max");

  const auto& ids = catalogue_ids();
  const int n_templates = static_cast<int>(ids.size());
  const int n_depths = layers.max_layers - layers.min_layers + 1;
  const int n_cells = n_templates * n_depths;

  CandidatePool pool;
  pool.master_seed = master_seed;
  pool.circuits.reserve(static_cast<std::size_t>(pool_size));
  pool.embeddings = Matrix(static_cast<std::size_t>(pool_size), std::size_t{1} << n_qubits);

  for (int i = 0; i < pool_size; ++i) {
    const int cell = i % n_cells;
    const std::string& id = ids[static_cast<std::size_t>(cell % n_templates)];
    const int depth = layers.min_layers + cell / n_templates;
    BoundCircuit circuit =
        bind_random(make_template(id, n_qubits, depth), mix_seed(master_seed, static_cast<std::uint64_t>(i)));
    pool.embeddings.set_row(static_cast<std::size_t>(i), distribution_embedding(circuit));
    pool.circuits.push_back(std::move(circuit));
  }
  return pool;
}

std::string circuit_to_record(const BoundCircuit& circuit) {
  nlohmann::json gates = nlohmann::json::array();
  for (const qsim::GateOp& g : circuit.gates()) {
    nlohmann::json entry = {{"kind", std::string(qsim::to_string(g.kind))},
                            {"targets", g.targets}};
    if (qsim::is_rotation(g.kind)) entry["angle"] = g.angle;
    gates.push_back(std::move(entry));
  }
  nlohmann::json doc = {
      {"template_id", circuit.tmpl.template_id},
      {"n_qubits", circuit.tmpl.n_qubits},
      {"n_layers", circuit.tmpl.n_layers},
      {"bind_seed", circuit.bind_seed},
      {"params", circuit.params},
      {"gates", std::move(gates)},
  };
  return doc.dump(2) + "\n";
}

BoundCircuit circuit_from_record(const std::string& record) {
  const nlohmann::json doc = nlohmann::json::parse(record);

  BoundCircuit circuit;
  circuit.tmpl.template_id = doc.at("template_id").get<std::string>();
  circuit.tmpl.n_qubits = doc.at("n_qubits").get<int>();
  circuit.tmpl.n_layers = doc.at("n_layers").get<int>();
  circuit.bind_seed = doc.at("bind_seed").get<std::uint64_t>();

  // The expanded gate list wins over the metadata: rebuild template gates and
  // parameter slots directly from it.
  for (const nlohmann::json& entry : doc.at("gates")) {
    qsim::GateOp g;
    g.kind = qsim::gate_kind_from_string(entry.at("kind").get<std::string>());
    g.targets = entry.at("targets").get<std::vector<int>>();
    if (qsim::is_rotation(g.kind)) {
      const double angle = entry.at("angle").get<double>();
      circuit.tmpl.param_slots.push_back({circuit.tmpl.gates.size(), g.kind});
      circuit.params.push_back(angle);
      g.angle = 0.0;
    }
    circuit.tmpl.gates.push_back(std::move(g));
  }
  return circuit;
}

void save_circuit(const BoundCircuit& circuit, const std::filesystem::path& path) {
  textio::write_file(path, circuit_to_record(circuit));
}

BoundCircuit load_circuit(const std::filesystem::path& path) {
  return circuit_from_record(textio::read_file(path));
}

}  // namespace qfl::ansatz
