#include "qfl/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qfl/rng.hpp"
#include "qfl/textio.hpp"

namespace qfl::cluster {

namespace {

// Nearest-centroid pass; ties to the lowest centroid index. Returns the
// objective and fills per-point assignment and squared distance.
double assign_pass(const Matrix& x, const Matrix& centroids, std::vector<int>& assign,
                   std::vector<double>& best_sq) {
  const std::size_t m = x.rows();
  const std::size_t k = centroids.rows();
  double objective = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      const double d = squared_distance(x.row(j), centroids.row(i));
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    assign[j] = best;
    best_sq[j] = best_d;
    objective += best_d;
  }
  return objective;
}

// Cluster means; empty clusters are reseeded, in index order, to the
// unclaimed point farthest from its assigned centroid. Returns the maximum
// centroid movement in Euclidean norm.
double update_pass(const Matrix& x, const std::vector<int>& assign,
                   const std::vector<double>& best_sq, Matrix& centroids) {
  const std::size_t m = x.rows();
  const std::size_t d = x.cols();
  const std::size_t k = centroids.rows();

  Matrix sums(k, d);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t j = 0; j < m; ++j) {
    const auto row = x.row(j);
    const auto target = sums.row(static_cast<std::size_t>(assign[j]));
    for (std::size_t c = 0; c < d; ++c) target[c] += row[c];
    ++counts[static_cast<std::size_t>(assign[j])];
  }

  Matrix next = centroids;
  std::vector<char> taken(m, 0);
  for (std::size_t i = 0; i < k; ++i) {
    if (counts[i] > 0) {
      for (std::size_t c = 0; c < d; ++c) next(i, c) = sums(i, c) / static_cast<double>(counts[i]);
    } else {
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (!taken[j] && best_sq[j] > far_d) {
          far_d = best_sq[j];
          far = j;
        }
      }
      taken[far] = 1;
      next.set_row(i, x.row(far));
    }
  }

  double max_move = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    max_move = std::max(max_move, std::sqrt(squared_distance(next.row(i), centroids.row(i))));
  centroids = std::move(next);
  return max_move;
}

}  // namespace

KMeansResult kmeans(const Matrix& x, int k, std::uint64_t seed, int max_iter, double tol) {
  const std::size_t m = x.rows();
  if (k < 1 || static_cast<std::size_t>(k) > m)
    throw std::invalid_argument("kmeans: k must be in [1, rows], got k=" + std::to_string(k) +
                                " for " + std::to_string(m) + " rows");
  if (max_iter < 1) throw std::invalid_argument("kmeans: max_iter must be >= 1");
  if (tol < 0.0) throw std::invalid_argument("kmeans: tol must be >= 0");
  for (double v : x.data())
    if (!std::isfinite(v)) throw std::invalid_argument("kmeans: input contains non-finite values");

  Rng rng(seed);
  const std::vector<int> init_rows = rng.sample_distinct(static_cast<int>(m), k);

  KMeansResult res;
  res.centroids = Matrix(static_cast<std::size_t>(k), x.cols());
  for (int i = 0; i < k; ++i)
    res.centroids.set_row(static_cast<std::size_t>(i), x.row(static_cast<std::size_t>(init_rows[static_cast<std::size_t>(i)])));

  res.assignments.assign(m, -1);
  std::vector<int> prev;
  std::vector<double> best_sq(m, 0.0);

  while (res.n_iterations < max_iter) {
    ++res.n_iterations;
    res.objective = assign_pass(x, res.centroids, res.assignments, best_sq);
    res.objective_history.push_back(res.objective);
    if (res.assignments == prev) break;  // fixed point: centroids are already the means
    prev = res.assignments;
    const double movement = update_pass(x, res.assignments, best_sq, res.centroids);
    if (movement <= tol) {
      // Align labels with the final centroids before stopping.
      res.objective = assign_pass(x, res.centroids, res.assignments, best_sq);
      res.objective_history.push_back(res.objective);
      break;
    }
  }
  return res;
}

Matrix PcaModel::transform(const Matrix& x) const {
  const std::size_t d = mean.size();
  if (x.cols() != d) throw std::invalid_argument("PcaModel::transform: dimension mismatch");
  const std::size_t r = components.rows();
  Matrix out(x.rows(), r);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    for (std::size_t c = 0; c < r; ++c) {
      double acc = 0.0;
      const auto comp = components.row(c);
      for (std::size_t j = 0; j < d; ++j) acc += (row[j] - mean[j]) * comp[j];
      out(i, c) = acc;
    }
  }
  return out;
}

PcaModel fit_pca(const Matrix& x, int r) {
  const std::size_t m = x.rows();
  const std::size_t d = x.cols();
  if (m == 0 || d == 0) throw std::invalid_argument("fit_pca: empty input");
  if (r < 1 || static_cast<std::size_t>(r) > std::min(m, d))
    throw std::invalid_argument("fit_pca: r must be in [1, min(rows, cols)], got " +
                                std::to_string(r));

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) model.mean[j] += row[j];
  }
  for (double& v : model.mean) v /= static_cast<double>(m);

  Eigen::MatrixXd centered(m, d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j)
      centered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          x(i, j) - model.mean[j];

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const auto& v = svd.matrixV();

  model.components = Matrix(static_cast<std::size_t>(r), d);
  model.explained_variance.resize(static_cast<std::size_t>(r));
  const double denom = m > 1 ? static_cast<double>(m - 1) : 1.0;
  for (int i = 0; i < r; ++i) {
    // Sign convention: make the largest-magnitude entry positive.
    Eigen::Index peak = 0;
    v.col(i).cwiseAbs().maxCoeff(&peak);
    const double sign = v(peak, i) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j)
      model.components(static_cast<std::size_t>(i), j) = sign * v(static_cast<Eigen::Index>(j), i);
    model.explained_variance[static_cast<std::size_t>(i)] = sv(i) * sv(i) / denom;
  }
  return model;
}

FilterBank select_filters(const ansatz::CandidatePool& pool, int k,
                          std::optional<int> pca_dims, std::uint64_t seed,
                          KMeansResult* clustering_out) {
  const std::size_t m = pool.circuits.size();
  if (k < 1 || static_cast<std::size_t>(k) > m)
    throw std::invalid_argument("select_filters: k=" + std::to_string(k) +
                                " exceeds pool size " + std::to_string(m));

  Matrix projected;
  const Matrix* emb = &pool.embeddings;
  int pca_used = 0;
  if (pca_dims) {
    const PcaModel model = fit_pca(pool.embeddings, *pca_dims);
    projected = model.transform(pool.embeddings);
    emb = &projected;
    pca_used = *pca_dims;
  }

  KMeansResult km = kmeans(*emb, k, seed);

  FilterBank bank;
  bank.filters.reserve(static_cast<std::size_t>(k));
  bank.selection_indices.reserve(static_cast<std::size_t>(k));
  std::vector<char> claimed(m, 0);
  for (int i = 0; i < k; ++i) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (claimed[j]) continue;
      const double d = squared_distance(emb->row(j), km.centroids.row(static_cast<std::size_t>(i)));
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    claimed[static_cast<std::size_t>(best)] = 1;
    bank.filters.push_back(pool.circuits[static_cast<std::size_t>(best)]);
    bank.selection_indices.push_back(best);
  }
  bank.provenance = {pool.master_seed, k, pca_used, seed};
  if (clustering_out) *clustering_out = std::move(km);
  return bank;
}

namespace {

std::string filter_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "filter_%03zu.json", index);
  return buf;
}

}  // namespace

void save_bank(const FilterBank& bank, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json filters = nlohmann::json::array();
  for (std::size_t i = 0; i < bank.filters.size(); ++i) {
    const std::string name = filter_filename(i);
    ansatz::save_circuit(bank.filters[i], dir / name);
    filters.push_back(name);
  }
  const nlohmann::json manifest = {
      {"level", bank.level},
      {"k", static_cast<int>(bank.filters.size())},
      {"catalogue_version", ansatz::kCatalogueVersion},
      {"selection_indices", bank.selection_indices},
      {"provenance",
       {{"pool_seed", bank.provenance.pool_seed},
        {"k", bank.provenance.k},
        {"pca_dims", bank.provenance.pca_dims},
        {"kmeans_seed", bank.provenance.kmeans_seed}}},
      {"filters", std::move(filters)},
  };
  textio::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

FilterBank load_bank(const std::filesystem::path& dir) {
  const nlohmann::json manifest = nlohmann::json::parse(textio::read_file(dir / "manifest.json"));
  FilterBank bank;
  bank.level = manifest.at("level").get<int>();
  bank.selection_indices = manifest.at("selection_indices").get<std::vector<int>>();
  const auto& prov = manifest.at("provenance");
  bank.provenance.pool_seed = prov.at("pool_seed").get<std::uint64_t>();
  bank.provenance.k = prov.at("k").get<int>();
  bank.provenance.pca_dims = prov.at("pca_dims").get<int>();
  bank.provenance.kmeans_seed = prov.at("kmeans_seed").get<std::uint64_t>();
  for (const nlohmann::json& name : manifest.at("filters"))
    bank.filters.push_back(ansatz::load_circuit(dir / name.get<std::string>()));
  return bank;
}

}  // namespace qfl::cluster
