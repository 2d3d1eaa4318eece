#include "recouple/conv.hpp"

#include <map>
#include <set>
#include <tuple>

namespace recouple {

AttentionWeights::AttentionWeights(Eigen::Index nodes, int heads, std::vector<std::int64_t> offsets,
                                   std::vector<std::int32_t> columns, RowMatrix<double> values)
    : nodes_(nodes),
      heads_(heads),
      offsets_(std::move(offsets)),
      columns_(std::move(columns)),
      values_(std::move(values)) {
  if (heads_ < 1) throw std::invalid_argument("attention needs at least one head");
  if (offsets_.size() != static_cast<std::size_t>(nodes_) + 1 || offsets_.front() != 0 ||
      offsets_.back() != static_cast<std::int64_t>(columns_.size()))
    throw std::invalid_argument("inconsistent attention offsets");
  if (values_.rows() != static_cast<Eigen::Index>(columns_.size()) || values_.cols() != heads_)
    throw std::invalid_argument("attention values must be nnz x heads");
  if (!values_.allFinite()) throw std::invalid_argument("attention weights must be finite");
  for (Eigen::Index i = 0; i < nodes_; ++i)
    for (auto e = offsets_[i]; e < offsets_[i + 1]; ++e) {
      if (columns_[e] < 0 || columns_[e] >= nodes_)
        throw std::out_of_range("attention column out of range");
      if (e > offsets_[i] && columns_[e] <= columns_[e - 1])
        throw std::invalid_argument("attention columns must increase within a row");
    }
}

AttentionWeights AttentionWeights::uniform(const NeighborGraph& graph, int heads, double value) {
  return from_graph(graph, RowMatrix<double>::Constant(graph.edges(), heads, value));
}

AttentionWeights AttentionWeights::from_graph(const NeighborGraph& graph,
                                              RowMatrix<double> values) {
  const int heads = static_cast<int>(values.cols());
  return AttentionWeights(graph.nodes(), heads, graph.offsets(), graph.sorted_indices(),
                          std::move(values));
}

AttentionWeights AttentionWeights::from_dense(const std::vector<Eigen::MatrixXd>& heads) {
  if (heads.empty()) throw std::invalid_argument("attention needs at least one head");
  const Eigen::Index n = heads.front().rows();
  for (const auto& m : heads)
    if (m.rows() != n || m.cols() != n)
      throw std::invalid_argument("dense attention heads must all be N x N");
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> columns;
  std::vector<double> flat;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool used = std::any_of(heads.begin(), heads.end(),
                                    [&](const Eigen::MatrixXd& m) { return m(i, j) != 0.0; });
      if (!used) continue;
      columns.push_back(static_cast<std::int32_t>(j));
      for (const auto& m : heads) flat.push_back(m(i, j));
    }
    offsets.push_back(static_cast<std::int64_t>(columns.size()));
  }
  RowMatrix<double> values =
      Eigen::Map<RowMatrix<double>>(flat.data(), columns.size(), heads.size());
  return AttentionWeights(n, static_cast<int>(heads.size()), std::move(offsets),
                          std::move(columns), std::move(values));
}

double AttentionWeights::lookup(Eigen::Index i, Eigen::Index j, int head) const {
  const auto cols = columns(i);
  const auto it = std::lower_bound(cols.begin(), cols.end(), j);
  if (it == cols.end() || *it != j) return 0.0;
  return values_(offsets_[i] + (it - cols.begin()), head);
}

NeighborGraph AttentionWeights::pattern() const {
  return NeighborGraph(GraphKind::Custom, nodes_, offsets_, columns_, true);
}

namespace detail {

void validate_input(const IrrepsLayout& input, const ConvConfig& cfg) {
  if (cfg.l_max < 0) throw std::invalid_argument("l_max must be nonnegative");
  if (cfg.l_max > kDefaultJMax)
    throw CapacityError("l_max " + std::to_string(cfg.l_max) + " exceeds coefficient capacity");
  if (cfg.channels < 1) throw std::invalid_argument("channel count must be positive");
  if (cfg.threads < 1) throw std::invalid_argument("thread count must be positive");
  if (!(cfg.epsilon >= 0)) throw std::invalid_argument("epsilon must be nonnegative");
  if (input.empty()) throw std::invalid_argument("input features have no degrees");
  for (const auto& e : input.entries()) {
    if (e.degree > cfg.l_max)
      throw std::invalid_argument("input degree " + std::to_string(e.degree) + " exceeds l_max");
    if (e.channels != cfg.channels)
      throw std::invalid_argument("input channels do not match the configuration");
  }
}

std::vector<EdgePath> edge_paths(const IrrepsLayout& input, int l_max) {
  std::vector<EdgePath> paths;
  for (const auto& e : input.entries())
    for (int l = 0; l <= l_max; ++l)
      for (int l_out = std::abs(e.degree - l); l_out <= std::min(e.degree + l, l_max); ++l_out)
        paths.push_back({e.degree, l, l_out});
  return paths;
}

FusedPlan make_fused_plan(const IrrepsLayout& input, const ConvConfig& cfg,
                          const PairConstants& kappa) {
  struct Raw {
    int a, q, d, u, l_out, exponent;
    double coef;
  };
  std::vector<Raw> raw;
  for (int l = 0; l <= cfg.l_max; ++l) {
    double binom = 1.0;  // C(l, u)
    for (int u = 0; u <= l; ++u) {
      const int q = l - u;
      const double base = ((q % 2) ? -binom : binom) / kappa(u, l);
      for (const auto& e : input.entries()) {
        const int a = e.degree;
        for (int l_out = std::abs(a - l); l_out <= std::min(a + l, cfg.l_max); ++l_out)
          for (int d = std::abs(a - q); d <= a + q; ++d) {
            if (!triangle_ok(d, u, l_out)) continue;
            const double w = recoupling_weight(a, q, u, d, l, l_out);
            if (w == 0.0) continue;
            const int exponent = cfg.normalization == Normalization::UnitY ? l : 0;
            raw.push_back({a, q, d, u, l_out, exponent, base * w});
          }
      }
      binom = binom * (l - u) / (u + 1);
    }
  }

  FusedPlan plan;
  plan.l_max = cfg.l_max;
  plan.channels = cfg.channels;
  std::map<std::tuple<int, int, int>, int> block_index;  // (q, a, d), q-major
  for (const auto& r : raw) block_index.emplace(std::make_tuple(r.q, r.a, r.d), 0);
  for (auto& [key, index] : block_index) {
    const auto [q, a, d] = key;
    index = static_cast<int>(plan.blocks.size());
    plan.blocks.push_back({a, q, d, plan.width});
    plan.width += cfg.channels * (2 * d + 1);
  }

  std::set<int> exponents;
  for (const auto& r : raw) exponents.insert(r.exponent);
  plan.exponents.assign(exponents.begin(), exponents.end());
  plan.prefix_blocks.assign(plan.exponents.size(), 0);

  std::map<std::tuple<int, int, int>, std::size_t> group_index;  // (d, u, l_out)
  for (const auto& r : raw) {
    const int block = block_index.at({r.q, r.a, r.d});
    const int slot = static_cast<int>(
        std::lower_bound(plan.exponents.begin(), plan.exponents.end(), r.exponent) -
        plan.exponents.begin());
    plan.prefix_blocks[slot] = std::max<std::size_t>(plan.prefix_blocks[slot], block + 1);
    auto [it, inserted] = group_index.emplace(std::make_tuple(r.d, r.u, r.l_out), plan.groups.size());
    if (inserted) plan.groups.push_back({r.d, r.u, r.l_out, {}});
    plan.groups[it->second].terms.push_back({block, slot, r.coef});
  }
  for (const auto count : plan.prefix_blocks) {
    const auto& last = plan.blocks[count - 1];
    plan.prefix_width.push_back(last.offset + cfg.channels * (2 * last.d + 1));
  }
  return plan;
}

RowMatrix<double> edge_weights(const NeighborGraph& graph, const AttentionWeights* alpha,
                               Eigen::Index channels) {
  if (!alpha) return RowMatrix<double>::Ones(graph.edges(), 1);
  if (alpha->nodes() != graph.nodes())
    throw std::invalid_argument("attention weights and graph disagree on N");
  if (channels % alpha->heads() != 0)
    throw std::invalid_argument("channels must divide into heads");
  RowMatrix<double> w(graph.edges(), alpha->heads());
  for (Eigen::Index i = 0; i < graph.nodes(); ++i) {
    const auto list = graph.sorted_neighbors(i);
    for (std::size_t e = 0; e < list.size(); ++e)
      for (int h = 0; h < alpha->heads(); ++h)
        w(graph.offsets()[i] + e, h) = alpha->lookup(i, list[e], h);
  }
  return w;
}

}  // namespace detail

}  // namespace recouple
