#include "recouple/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "recouple/rng.hpp"

namespace recouple {

PointCloud random_cloud(Eigen::Index n, std::uint64_t seed, double density) {
  if (n < 1) throw std::invalid_argument("random_cloud needs at least one point");
  if (!(density > 0)) throw std::invalid_argument("density must be positive");
  PointCloud cloud;
  cloud.seed = seed;
  cloud.side = std::cbrt(static_cast<double>(n) / density);
  cloud.positions.resize(n, 3);
  CounterRng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) cloud.positions(i, c) = cloud.side * (rng.uniform() - 0.5);
  return cloud;
}

void save_cloud(std::ostream& out, const PointCloud& cloud) {
  char line[128];
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g %.17g %.17g\n", cloud.positions(i, 0),
                  cloud.positions(i, 1), cloud.positions(i, 2));
    out << line;
  }
}

PointCloud load_cloud(std::istream& in) {
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double v[3];
    int count = 0;
    std::string token;
    while (fields >> token) {
      if (count == 3) throw std::runtime_error("line " + std::to_string(line_no) + ": extra fields");
      std::size_t used = 0;
      try {
        v[count] = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size() || !std::isfinite(v[count]))
        throw std::runtime_error("line " + std::to_string(line_no) + ": bad number '" + token + "'");
      ++count;
    }
    if (count == 0) continue;
    if (count != 3)
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected three values");
    values.insert(values.end(), v, v + 3);
  }
  if (values.empty()) throw std::runtime_error("cloud file has no points");
  PointCloud cloud;
  cloud.positions = Eigen::Map<Positions<double>>(values.data(), values.size() / 3, 3);
  return cloud;
}

void save_cloud(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_cloud(out, cloud);
}

PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_cloud(in);
}

NeighborGraph::NeighborGraph(GraphKind kind, Eigen::Index nodes, std::vector<std::int64_t> offsets,
                             std::vector<std::int32_t> indices, bool include_self)
    : kind_(kind),
      nodes_(nodes),
      offsets_(std::move(offsets)),
      indices_(std::move(indices)),
      include_self_(include_self) {
  if (offsets_.size() != static_cast<std::size_t>(nodes_) + 1 || offsets_.front() != 0 ||
      offsets_.back() != static_cast<std::int64_t>(indices_.size()))
    throw std::invalid_argument("inconsistent neighbor offsets");
  sorted_ = indices_;
  for (Eigen::Index i = 0; i < nodes_; ++i) {
    if (offsets_[i + 1] < offsets_[i]) throw std::invalid_argument("decreasing neighbor offsets");
    auto first = sorted_.begin() + offsets_[i], last = sorted_.begin() + offsets_[i + 1];
    std::sort(first, last);
    if (std::adjacent_find(first, last) != last)
      throw std::invalid_argument("duplicate neighbor in list of node " + std::to_string(i));
    for (auto it = first; it != last; ++it) {
      if (*it < 0 || *it >= nodes_) throw std::out_of_range("neighbor index out of range");
      if (*it == i && !include_self_)
        throw std::invalid_argument("self loop on node " + std::to_string(i));
    }
  }
}

NeighborGraph NeighborGraph::with_self_loops() const {
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> indices;
  for (Eigen::Index i = 0; i < nodes_; ++i) {
    const auto list = neighbors(i);
    indices.insert(indices.end(), list.begin(), list.end());
    if (std::find(list.begin(), list.end(), i) == list.end())
      indices.push_back(static_cast<std::int32_t>(i));
    offsets.push_back(static_cast<std::int64_t>(indices.size()));
  }
  return NeighborGraph(kind_, nodes_, std::move(offsets), std::move(indices), true);
}

NeighborGraph dense(Eigen::Index n, bool include_self) {
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> indices;
  indices.reserve(n * (include_self ? n : n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i || include_self) indices.push_back(static_cast<std::int32_t>(j));
    offsets.push_back(static_cast<std::int64_t>(indices.size()));
  }
  return NeighborGraph(GraphKind::Dense, n, std::move(offsets), std::move(indices), include_self);
}

namespace {

// Brute-force search; candidates ordered by (squared distance, index).
NeighborGraph nearest(GraphKind kind, const Positions<double>& p, Eigen::Index limit,
                      double r_cut) {
  const Eigen::Index n = p.rows();
  const double r2_cut = std::isinf(r_cut) ? r_cut : r_cut * r_cut;
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> indices;
  std::vector<std::pair<double, std::int32_t>> candidates;
  for (Eigen::Index i = 0; i < n; ++i) {
    candidates.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d2 = (p.row(i) - p.row(j)).squaredNorm();
      if (d2 <= r2_cut) candidates.emplace_back(d2, static_cast<std::int32_t>(j));
    }
    const auto keep = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(limit));
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end());
    for (std::size_t c = 0; c < keep; ++c) indices.push_back(candidates[c].second);
    offsets.push_back(static_cast<std::int64_t>(indices.size()));
  }
  return NeighborGraph(kind, n, std::move(offsets), std::move(indices), false);
}

}  // namespace

NeighborGraph knn(const Positions<double>& positions, Eigen::Index k) {
  if (k < 1) throw std::invalid_argument("knn needs k >= 1");
  return nearest(GraphKind::Knn, positions, k, std::numeric_limits<double>::infinity());
}

NeighborGraph knn(const PointCloud& cloud, Eigen::Index k) { return knn(cloud.positions, k); }

NeighborGraph radius(const PointCloud& cloud, double r_cut, Eigen::Index max_neighbors) {
  if (!(r_cut >= 0)) throw std::invalid_argument("cutoff radius must be nonnegative");
  return nearest(GraphKind::Radius, cloud.positions, max_neighbors, r_cut);
}

}  // namespace recouple
