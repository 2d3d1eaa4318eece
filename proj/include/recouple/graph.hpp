#pragma once

// Point clouds and directed neighbor graphs.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "recouple/harmonics.hpp"

namespace recouple {

struct PointCloud {
  Positions<double> positions;
  std::uint64_t seed = 0;
  double side = 0.0;

  Eigen::Index size() const { return positions.rows(); }
};

/// N points uniform in the centered cube [-side/2, side/2)^3 with side = (N / density)^(1/3).
/// Draws come from CounterRng(seed), so a given (N, seed, density) is bit-identical everywhere.
PointCloud random_cloud(Eigen::Index n, std::uint64_t seed, double density = 1.0);

/// Plain-text format: one node per line, three whitespace-separated decimals, `#` starts a
/// comment. Values are written with 17 significant digits so a round trip is exact.
void save_cloud(std::ostream& out, const PointCloud& cloud);
PointCloud load_cloud(std::istream& in);
void save_cloud(const std::string& path, const PointCloud& cloud);
PointCloud load_cloud(const std::string& path);

enum class GraphKind { Dense, Knn, Radius, Custom };

/// Compressed neighbor lists. Dense lists are in index order; knn and radius lists are in
/// order of increasing distance with ties broken by the lower index. sorted_neighbors()
/// gives every list in index order, which is the order convolutions accumulate in.
class NeighborGraph {
 public:
  NeighborGraph() = default;
  NeighborGraph(GraphKind kind, Eigen::Index nodes, std::vector<std::int64_t> offsets,
                std::vector<std::int32_t> indices, bool include_self);

  GraphKind kind() const { return kind_; }
  Eigen::Index nodes() const { return nodes_; }
  std::size_t edges() const { return indices_.size(); }
  bool include_self() const { return include_self_; }

  std::span<const std::int32_t> neighbors(Eigen::Index i) const {
    return {indices_.data() + offsets_[i], static_cast<std::size_t>(offsets_[i + 1] - offsets_[i])};
  }
  std::span<const std::int32_t> sorted_neighbors(Eigen::Index i) const {
    return {sorted_.data() + offsets_[i], static_cast<std::size_t>(offsets_[i + 1] - offsets_[i])};
  }
  const std::vector<std::int64_t>& offsets() const { return offsets_; }
  /// Index-ordered CSR column array (same offsets as neighbors()).
  const std::vector<std::int32_t>& sorted_indices() const { return sorted_; }

  /// Returns a copy with i appended to its own list where it is missing.
  NeighborGraph with_self_loops() const;

 private:
  GraphKind kind_ = GraphKind::Dense;
  Eigen::Index nodes_ = 0;
  std::vector<std::int64_t> offsets_{0};
  std::vector<std::int32_t> indices_;
  std::vector<std::int32_t> sorted_;
  bool include_self_ = false;
};

NeighborGraph dense(Eigen::Index n, bool include_self = false);

/// Directed kNN (no symmetric closure): min(k, N-1) nearest others per node.
NeighborGraph knn(const PointCloud& cloud, Eigen::Index k);
NeighborGraph knn(const Positions<double>& positions, Eigen::Index k);

/// Up to `max_neighbors` nearest others with distance <= r_cut.
NeighborGraph radius(const PointCloud& cloud, double r_cut,
                     Eigen::Index max_neighbors = std::numeric_limits<Eigen::Index>::max());

}  // namespace recouple
