#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "qfl/ansatz.hpp"
#include "qfl/matrix.hpp"

namespace qfl::cluster {

struct KMeansResult {
  Matrix centroids;                       // K x d mean vectors
  std::vector<int> assignments;           // length m, values in [0, K)
  double objective = 0.0;                 // sum of squared distances to assigned centroids
  int n_iterations = 0;
  std::vector<double> objective_history;  // objective after each assignment pass
};

/// Lloyd iteration: initial centroids are K distinct rows sampled uniformly,
/// assignment ties go to the lowest cluster index, empty clusters are
/// reseeded to the point farthest from its nearest centroid. Stops when the
/// assignment reaches a fixed point, when no centroid moves more than `tol`
/// (Euclidean), or after max_iter rounds.
KMeansResult kmeans(const Matrix& x, int k, std::uint64_t seed, int max_iter = 300,
                    double tol = 1e-8);

struct PcaModel {
  std::vector<double> mean;
  Matrix components;                       // r x d, orthonormal rows
  std::vector<double> explained_variance;  // non-increasing

  /// Projects rows onto the components: (x - mean) * components^T.
  Matrix transform(const Matrix& x) const;
};

/// Top-r principal directions of the centered data. Sign convention: the
/// largest-magnitude entry of each component is positive.
PcaModel fit_pca(const Matrix& x, int r);

struct BankProvenance {
  std::uint64_t pool_seed = 0;
  int k = 0;
  int pca_dims = 0;  // 0 when PCA was not applied
  std::uint64_t kmeans_seed = 0;

  bool operator==(const BankProvenance&) const = default;
};

/// The K circuits chosen as one level's feature extractors, ordered by the
/// centroid they were nearest to.
struct FilterBank {
  int level = 1;
  std::vector<ansatz::BoundCircuit> filters;
  std::vector<int> selection_indices;  // distinct pool row indices
  BankProvenance provenance;
};

/// Clusters the pool's distribution embeddings (optionally PCA-projected to
/// pca_dims first) and picks, per centroid, the nearest still-unclaimed pool
/// circuit; ties go to the lowest pool index. Pass `clustering_out` to
/// observe the K-means result itself.
FilterBank select_filters(const ansatz::CandidatePool& pool, int k,
                          std::optional<int> pca_dims, std::uint64_t seed,
                          KMeansResult* clustering_out = nullptr);

/// Bank directory layout: manifest.json plus one filter_XXX.json per filter.
void save_bank(const FilterBank& bank, const std::filesystem::path& dir);
FilterBank load_bank(const std::filesystem::path& dir);

}  // namespace qfl::cluster
