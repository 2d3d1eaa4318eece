#pragma once

// Edge-wise and node-wise equivariant convolutions.
//
//   edge_conv            h'_i = sum_j a_ij sum_paths [h_j^(a) x R^(l)(r_i - r_j)]^(L)
//   node_conv            the same operator, with R^(l)(r_i - r_j) expanded into products of
//                        R^(u)(r_i) and R^(l-u)(r_j) and recoupled so that every tensor
//                        product depends on a single node
//   attention_node_conv  the per-degree loop written out step by step (reference form)
//   global_conv          node_conv on the complete graph via moments shared by all centers
//
// R^(l) are normalized solid harmonics r^l Y_lm. In UnitY mode the degree-l harmonic of an
// edge is divided by |r_ij|^l. Path weights are all one; every pair of input degree a and
// harmonic degree l <= l_max contributes to each output degree L <= l_max it can reach.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "recouple/coupling.hpp"
#include "recouple/errors.hpp"
#include "recouple/graph.hpp"
#include "recouple/harmonics.hpp"
#include "recouple/irreps.hpp"

namespace recouple {

enum class Normalization {
  RawSolid,    // harmonics are r^l Y_lm
  UnitY,       // harmonics are Y_lm(r / |r|)
  Alg1Literal  // attention_node_conv only: divide by |r_ij|^k inside the per-k loop
};

struct ConvConfig {
  int l_max = 2;
  Eigen::Index channels = 4;
  Normalization normalization = Normalization::RawSolid;
  bool include_self = false;
  double epsilon = 1e-8;  // minimum edge length when dividing by it
  int threads = 1;
};

/// Sparse attention weights alpha_ijh. Columns of each row are kept in increasing order.
class AttentionWeights {
 public:
  AttentionWeights() = default;
  AttentionWeights(Eigen::Index nodes, int heads, std::vector<std::int64_t> offsets,
                   std::vector<std::int32_t> columns, RowMatrix<double> values);

  /// `value` on every edge of the graph.
  static AttentionWeights uniform(const NeighborGraph& graph, int heads = 1, double value = 1.0);
  /// Values given per edge in sorted_neighbors() order, one column per head.
  static AttentionWeights from_graph(const NeighborGraph& graph, RowMatrix<double> values);
  /// One N x N matrix per head; the pattern keeps entries that are nonzero in any head.
  static AttentionWeights from_dense(const std::vector<Eigen::MatrixXd>& heads);

  Eigen::Index nodes() const { return nodes_; }
  int heads() const { return heads_; }
  std::size_t nnz() const { return columns_.size(); }
  std::span<const std::int32_t> columns(Eigen::Index i) const {
    return {columns_.data() + offsets_[i], static_cast<std::size_t>(offsets_[i + 1] - offsets_[i])};
  }
  std::int64_t row_begin(Eigen::Index i) const { return offsets_[i]; }
  double value(std::int64_t entry, int head) const { return values_(entry, head); }
  /// alpha_ijh, or 0 when (i, j) is not in the pattern.
  double lookup(Eigen::Index i, Eigen::Index j, int head) const;
  /// The sparsity pattern as a graph (self loops allowed).
  NeighborGraph pattern() const;

 private:
  Eigen::Index nodes_ = 0;
  int heads_ = 1;
  std::vector<std::int64_t> offsets_{0};
  std::vector<std::int32_t> columns_;
  RowMatrix<double> values_;
};

struct ConvCounters {
  std::uint64_t tensor_products = 0;  // calls of a coupling kernel on one node or one edge
  std::uint64_t scalar_adds = 0;      // weighted block accumulations performed per edge
  ConvCounters& operator+=(const ConvCounters& o) {
    tensor_products += o.tensor_products;
    scalar_adds += o.scalar_adds;
    return *this;
  }
};

template <typename Scalar>
struct ConvResult {
  IrrepTensor<Scalar> features;
  ConvCounters counters;
};

/// Runs fn(begin, end) over [0, n) split into contiguous chunks, one per thread.
inline void parallel_for(Eigen::Index n, int threads,
                         const std::function<void(Eigen::Index, Eigen::Index, int)>& fn) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(std::max<Eigen::Index>(n, 1))));
  if (threads == 1) {
    fn(0, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  const Eigen::Index chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const Eigen::Index begin = std::min(n, t * chunk), end = std::min(n, begin + chunk);
    pool.emplace_back(fn, begin, end, t);
  }
  for (auto& th : pool) th.join();
}

namespace detail {

// One per-node intermediate P^(a,q,d) = [h^(a) x R^(q)]^(d), stored C x (2d+1) at `offset`.
struct FusedBlock {
  int a, q, d;
  Eigen::Index offset;
};

// Contribution coef * S_e[block] to the group it belongs to.
struct FusedTerm {
  int block;
  int exponent_slot;
  double coef;
};

// Output update [T x R^(u)(r_i)]^(l_out) with T = sum of the group's terms.
struct FusedGroup {
  int d, u, l_out;
  std::vector<FusedTerm> terms;
};

struct FusedPlan {
  int l_max = 0;
  Eigen::Index channels = 0;
  std::vector<FusedBlock> blocks;  // ordered by q, so blocks with q <= e form a prefix
  std::vector<FusedGroup> groups;
  Eigen::Index width = 0;          // scalars per node of P
  std::vector<int> exponents;      // distance exponent of each aggregation slot
  std::vector<std::size_t> prefix_blocks;
  std::vector<Eigen::Index> prefix_width;
};

FusedPlan make_fused_plan(const IrrepsLayout& input, const ConvConfig& cfg,
                          const PairConstants& kappa);

struct EdgePath {
  int a, l, l_out;
};
std::vector<EdgePath> edge_paths(const IrrepsLayout& input, int l_max);

void validate_input(const IrrepsLayout& input, const ConvConfig& cfg);

// Per-edge weights of `graph` in sorted order, E x heads; ones when alpha is null.
RowMatrix<double> edge_weights(const NeighborGraph& graph, const AttentionWeights* alpha,
                               Eigen::Index channels);

inline NeighborGraph prepared_graph(const NeighborGraph& graph, const ConvConfig& cfg) {
  return cfg.include_self ? graph.with_self_loops() : graph;
}

// dst += w * src over a row of channel-major blocks, heads owning contiguous channel ranges.
template <typename Scalar>
void weighted_add(Scalar* dst, const Scalar* src, const std::vector<FusedBlock>& blocks,
                  std::size_t block_count, Eigen::Index width, Eigen::Index channels,
                  const double* w, int heads, Scalar extra) {
  if (heads == 1) {
    const Scalar s = static_cast<Scalar>(w[0]) * extra;
    Eigen::Map<VectorX<Scalar>>(dst, width) += s * Eigen::Map<const VectorX<Scalar>>(src, width);
    return;
  }
  const Eigen::Index per_head = channels / heads;
  for (std::size_t b = 0; b < block_count; ++b) {
    const Eigen::Index dim = 2 * blocks[b].d + 1;
    for (int h = 0; h < heads; ++h) {
      const Eigen::Index start = blocks[b].offset + h * per_head * dim;
      const Scalar s = static_cast<Scalar>(w[h]) * extra;
      Eigen::Map<VectorX<Scalar>>(dst + start, per_head * dim) +=
          s * Eigen::Map<const VectorX<Scalar>>(src + start, per_head * dim);
    }
  }
}

template <typename Scalar>
Scalar inverse_power(Scalar length, int exponent) {
  Scalar r = 1;
  for (int e = 0; e < exponent; ++e) r /= length;
  return r;
}

// P_j for every node: returns N x plan.width.
template <typename Scalar>
RowMatrix<Scalar> fused_intermediates(const FusedPlan& plan, const IrrepTensor<Scalar>& h,
                                      const SolidHarmonicsTable<Scalar>& sh, int threads,
                                      ConvCounters& counters) {
  RowMatrix<Scalar> p = RowMatrix<Scalar>::Zero(h.nodes(), plan.width);
  std::vector<const CouplingTable*> tables;
  for (const auto& b : plan.blocks) tables.push_back(&coupling_table(b.a, b.q, b.d));
  parallel_for(h.nodes(), threads, [&](Eigen::Index begin, Eigen::Index end, int) {
    for (Eigen::Index j = begin; j < end; ++j)
      for (std::size_t b = 0; b < plan.blocks.size(); ++b) {
        const auto& blk = plan.blocks[b];
        couple_broadcast<Scalar>(*tables[b], h.data(j, blk.a), sh.data(j, blk.q),
                                 p.data() + j * plan.width + blk.offset, plan.channels,
                                 Scalar(1));
      }
  });
  counters.tensor_products += static_cast<std::uint64_t>(h.nodes()) * plan.blocks.size();
  return p;
}

// Output rows from the aggregated slots S (one N x prefix_width matrix per exponent slot).
template <typename Scalar>
IrrepTensor<Scalar> fused_finish(const FusedPlan& plan, const std::vector<RowMatrix<Scalar>>& s,
                                 const SolidHarmonicsTable<Scalar>& sh, int threads,
                                 ConvCounters& counters) {
  const Eigen::Index n = sh.nodes();
  IrrepTensor<Scalar> out(n, IrrepsLayout::uniform(plan.l_max, plan.channels));
  std::vector<const CouplingTable*> tables;
  for (const auto& g : plan.groups) tables.push_back(&coupling_table(g.d, g.u, g.l_out));
  parallel_for(n, threads, [&](Eigen::Index begin, Eigen::Index end, int) {
    VectorX<Scalar> t;
    for (Eigen::Index i = begin; i < end; ++i)
      for (std::size_t g = 0; g < plan.groups.size(); ++g) {
        const auto& group = plan.groups[g];
        const Eigen::Index width = plan.channels * (2 * group.d + 1);
        t.setZero(width);
        for (const auto& term : group.terms) {
          const auto& slot = s[term.exponent_slot];
          t += static_cast<Scalar>(term.coef) *
               Eigen::Map<const VectorX<Scalar>>(
                   slot.data() + i * slot.cols() + plan.blocks[term.block].offset, width);
        }
        couple_broadcast<Scalar>(*tables[g], t.data(), sh.data(i, group.u),
                                 out.data(i, group.l_out), plan.channels, Scalar(1));
      }
  });
  counters.tensor_products += static_cast<std::uint64_t>(n) * plan.groups.size();
  return out;
}

}  // namespace detail

/// Edge-wise convolution: one tensor product per (edge, path).
template <typename Scalar>
ConvResult<Scalar> edge_conv(const NeighborGraph& graph, const Positions<Scalar>& positions,
                             const IrrepTensor<Scalar>& h, const ConvConfig& cfg,
                             const AttentionWeights* alpha = nullptr) {
  detail::validate_input(h.layout(), cfg);
  if (positions.rows() != h.nodes() || graph.nodes() != h.nodes())
    throw std::invalid_argument("edge_conv: positions, graph and features disagree on N");
  if (cfg.normalization == Normalization::Alg1Literal)
    throw std::invalid_argument("alg1-literal normalization exists only in attention_node_conv");
  const NeighborGraph g = detail::prepared_graph(graph, cfg);
  const RowMatrix<double> weights = detail::edge_weights(g, alpha, cfg.channels);
  const int heads = static_cast<int>(weights.cols());
  const auto paths = detail::edge_paths(h.layout(), cfg.l_max);
  std::vector<const CouplingTable*> tables;
  for (const auto& p : paths) tables.push_back(&coupling_table(p.a, p.l, p.l_out));
  const bool unit_y = cfg.normalization == Normalization::UnitY;
  const auto& constants = harmonic_constants(cfg.l_max);
  const Eigen::Index per_head = cfg.channels / heads;

  ConvResult<Scalar> result;
  result.features = IrrepTensor<Scalar>(h.nodes(), IrrepsLayout::uniform(cfg.l_max, cfg.channels));
  auto& out = result.features;
  parallel_for(h.nodes(), cfg.threads, [&](Eigen::Index begin, Eigen::Index end, int) {
    VectorX<Scalar> sh(sh_size(cfg.l_max));
    for (Eigen::Index i = begin; i < end; ++i) {
      const auto list = g.sorted_neighbors(i);
      for (std::size_t e = 0; e < list.size(); ++e) {
        const Eigen::Index j = list[e];
        const Eigen::Index edge = g.offsets()[i] + static_cast<Eigen::Index>(e);
        const Vector3<Scalar> r = positions.row(i) - positions.row(j);
        solid_sh_into<Scalar>(constants, cfg.l_max, r.x(), r.y(), r.z(), sh.data());
        if (unit_y && cfg.l_max > 0) {
          const Scalar len = r.norm();
          if (!(len >= cfg.epsilon)) throw DegenerateEdgeError(i, j, static_cast<double>(len));
          for (int l = 1; l <= cfg.l_max; ++l)
            sh.segment(sh_offset(l), 2 * l + 1) *= detail::inverse_power(len, l);
        }
        for (std::size_t p = 0; p < paths.size(); ++p) {
          const auto& path = paths[p];
          for (int hd = 0; hd < heads; ++hd)
            couple_broadcast<Scalar>(*tables[p],
                                     h.data(j, path.a) + hd * per_head * (2 * path.a + 1),
                                     sh.data() + sh_offset(path.l),
                                     out.data(i, path.l_out) + hd * per_head * (2 * path.l_out + 1),
                                     per_head, static_cast<Scalar>(weights(edge, hd)));
        }
      }
    }
  });
  result.counters.tensor_products = static_cast<std::uint64_t>(g.edges()) * paths.size();
  result.counters.scalar_adds = static_cast<std::uint64_t>(g.edges()) * paths.size();
  return result;
}

/// Degree-l solid harmonic of r_i - r_j assembled from harmonics of r_i and r_j alone.
template <typename Scalar>
VectorX<Scalar> binomial_expand_sh(int l, const Vector3<Scalar>& ri, const Vector3<Scalar>& rj,
                                   const PairConstants& kappa) {
  if (kappa.l_max < l) throw std::invalid_argument("pair constants do not cover this degree");
  const auto si = solid_sh<Scalar>(l, ri), sj = solid_sh<Scalar>(l, rj);
  VectorX<Scalar> out = VectorX<Scalar>::Zero(2 * l + 1);
  double binom = 1.0;  // C(l, u)
  for (int u = 0; u <= l; ++u) {
    const double coef = (((l - u) % 2) ? -binom : binom) / kappa(u, l);
    out += static_cast<Scalar>(coef) *
           couple<Scalar>(si.block(0, u).transpose(), u, sj.block(0, l - u).transpose(), l - u, l);
    binom = binom * (l - u) / (u + 1);
  }
  return out;
}

/// Node-wise convolution. Per-node tensor products only; edges carry scalar-weighted sums.
/// `kappa` defaults to the memoized calibration for cfg.l_max; passing a table calibrated
/// for a smaller cutoff is rejected.
template <typename Scalar>
ConvResult<Scalar> node_conv(const NeighborGraph& graph, const Positions<Scalar>& positions,
                             const IrrepTensor<Scalar>& h, const ConvConfig& cfg,
                             const AttentionWeights* alpha = nullptr,
                             const PairConstants* kappa = nullptr) {
  detail::validate_input(h.layout(), cfg);
  if (positions.rows() != h.nodes() || graph.nodes() != h.nodes())
    throw std::invalid_argument("node_conv: positions, graph and features disagree on N");
  if (cfg.normalization == Normalization::Alg1Literal)
    throw std::invalid_argument("alg1-literal normalization exists only in attention_node_conv");
  if (kappa && kappa->l_max < cfg.l_max)
    throw std::invalid_argument("node_conv: pair constants are stale for l_max = " +
                                std::to_string(cfg.l_max));
  const PairConstants& k = kappa ? *kappa : pair_constants(cfg.l_max);
  const detail::FusedPlan plan = detail::make_fused_plan(h.layout(), cfg, k);
  const NeighborGraph g = detail::prepared_graph(graph, cfg);
  const RowMatrix<double> weights = detail::edge_weights(g, alpha, cfg.channels);
  const int heads = static_cast<int>(weights.cols());

  ConvResult<Scalar> result;
  const auto sh = solid_sh<Scalar>(cfg.l_max, positions);
  const RowMatrix<Scalar> p = detail::fused_intermediates(plan, h, sh, cfg.threads, result.counters);

  std::vector<RowMatrix<Scalar>> s;
  for (const auto w : plan.prefix_width) s.push_back(RowMatrix<Scalar>::Zero(h.nodes(), w));
  parallel_for(h.nodes(), cfg.threads, [&](Eigen::Index begin, Eigen::Index end, int) {
    for (Eigen::Index i = begin; i < end; ++i) {
      const auto list = g.sorted_neighbors(i);
      for (std::size_t e = 0; e < list.size(); ++e) {
        const Eigen::Index j = list[e];
        const Eigen::Index edge = g.offsets()[i] + static_cast<Eigen::Index>(e);
        Scalar len = 1;
        if (plan.exponents.back() > 0) {
          len = (positions.row(i) - positions.row(j)).norm();
          if (!(len >= cfg.epsilon)) throw DegenerateEdgeError(i, j, static_cast<double>(len));
        }
        for (std::size_t x = 0; x < s.size(); ++x)
          detail::weighted_add<Scalar>(s[x].data() + i * s[x].cols(), p.data() + j * plan.width,
                                       plan.blocks, plan.prefix_blocks[x], plan.prefix_width[x],
                                       plan.channels,
                                       weights.row(edge).data(), heads,
                                       detail::inverse_power(len, plan.exponents[x]));
      }
    }
  });
  std::uint64_t per_edge = 0;
  for (const auto b : plan.prefix_blocks) per_edge += b;
  result.counters.scalar_adds = static_cast<std::uint64_t>(g.edges()) * per_edge;

  result.features = detail::fused_finish(plan, s, sh, cfg.threads, result.counters);
  return result;
}

/// Per-degree reference loop over (l, k): T_k = [h x R^(k)(r_j)], neighbor sum with
/// alpha / D^e, recoupling with R^(l-k)(r_i) through wigner6j_tp. The exponent e is 0 for
/// RawSolid, l for UnitY and k for Alg1Literal. The neighborhood is alpha's pattern.
template <typename Scalar>
ConvResult<Scalar> attention_node_conv(const Positions<Scalar>& positions,
                                       const IrrepTensor<Scalar>& h,
                                       const AttentionWeights& alpha, const ConvConfig& cfg) {
  detail::validate_input(h.layout(), cfg);
  if (positions.rows() != h.nodes() || alpha.nodes() != h.nodes())
    throw std::invalid_argument("attention_node_conv: positions, weights and features disagree");
  const Eigen::Index n = h.nodes();
  const int heads = alpha.heads();
  if (cfg.channels % heads != 0) throw std::invalid_argument("channels must divide into heads");
  const Eigen::Index per_head = cfg.channels / heads;
  const PairConstants& kappa = pair_constants(cfg.l_max);
  const auto sh = solid_sh<Scalar>(cfg.l_max, positions);

  // Pairwise distances, computed once.
  std::vector<Scalar> dist(alpha.nnz());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto cols = alpha.columns(i);
    for (std::size_t e = 0; e < cols.size(); ++e)
      dist[alpha.row_begin(i) + e] = (positions.row(i) - positions.row(cols[e])).norm();
  }

  ConvResult<Scalar> result;
  result.features = IrrepTensor<Scalar>(n, IrrepsLayout::uniform(cfg.l_max, cfg.channels));
  auto harmonic = [&](int degree) {
    RowMatrix<Scalar> v(n, 2 * degree + 1);
    for (Eigen::Index i = 0; i < n; ++i) v.row(i) = sh.block(i, degree);
    return IrrepTensor<Scalar>(IrrepsLayout::single(degree), std::move(v));
  };

  for (int l = 0; l <= cfg.l_max; ++l) {
    double binom = 1.0;  // C(l, k)
    for (int k = 0; k <= l; ++k) {
      const int u = l - k;
      const int exponent = cfg.normalization == Normalization::RawSolid ? 0
                           : cfg.normalization == Normalization::UnitY ? l
                                                                        : k;
      const auto rj = harmonic(k);
      const auto ri = harmonic(u);
      const double sign = (k % 2) ? -1.0 : 1.0;
      for (const auto& entry : h.layout().entries()) {
        const int a = entry.degree;
        std::vector<PathSpec> paths;
        for (int d = std::abs(a - k); d <= a + k; ++d) paths.emplace_back(a, k, d);
        const auto t = cg_tp(project(h, a), rj, paths);
        result.counters.tensor_products += static_cast<std::uint64_t>(n) * paths.size();

        IrrepTensor<Scalar> s(n, t.layout());
        for (Eigen::Index i = 0; i < n; ++i) {
          const auto cols = alpha.columns(i);
          for (std::size_t e = 0; e < cols.size(); ++e) {
            const auto entry_index = alpha.row_begin(i) + static_cast<std::int64_t>(e);
            Scalar scale = 1;
            if (exponent > 0) {
              if (!(dist[entry_index] >= cfg.epsilon))
                throw DegenerateEdgeError(i, cols[e], static_cast<double>(dist[entry_index]));
              scale = detail::inverse_power(dist[entry_index], exponent);
            }
            for (const auto& te : t.layout().entries())
              for (int hd = 0; hd < heads; ++hd)
                s.block(i, te.degree).middleRows(hd * per_head, per_head) +=
                    static_cast<Scalar>(alpha.value(entry_index, hd)) * scale *
                    t.block(cols[e], te.degree).middleRows(hd * per_head, per_head);
          }
          result.counters.scalar_adds += cols.size() * t.layout().size();
        }

        for (int l_out = std::abs(a - l); l_out <= std::min(a + l, cfg.l_max); ++l_out) {
          const auto part = wigner6j_tp(s, a, k, ri, l_out, l);
          result.counters.tensor_products += static_cast<std::uint64_t>(n) * s.layout().size();
          const Scalar coef = static_cast<Scalar>(sign * binom / kappa(u, l));
          for (Eigen::Index i = 0; i < n; ++i)
            result.features.block(i, l_out) += coef * part.block(i, l_out);
        }
      }
      binom = binom * (l - k) / (k + 1);
    }
  }
  return result;
}

/// Moments M^(a,q,d) = sum over all nodes of [h_j^(a) x R^(q)(r_j)]^(d), shared by every center.
template <typename Scalar>
struct GlobalMoments {
  detail::FusedPlan plan;
  RowMatrix<Scalar> per_node;  // N x width, the individual contributions
  VectorX<Scalar> total;       // width
  ConvCounters counters;
};

template <typename Scalar>
GlobalMoments<Scalar> global_moments(const Positions<Scalar>& positions,
                                     const IrrepTensor<Scalar>& h, const ConvConfig& cfg) {
  detail::validate_input(h.layout(), cfg);
  if (cfg.normalization != Normalization::RawSolid)
    throw std::invalid_argument("global moments are defined for raw solid harmonics only");
  GlobalMoments<Scalar> m;
  m.plan = detail::make_fused_plan(h.layout(), cfg, pair_constants(cfg.l_max));
  const auto sh = solid_sh<Scalar>(cfg.l_max, positions);
  m.per_node = detail::fused_intermediates(m.plan, h, sh, cfg.threads, m.counters);
  m.total = m.per_node.colwise().sum().transpose();
  m.counters.scalar_adds += static_cast<std::uint64_t>(h.nodes()) * m.plan.blocks.size();
  return m;
}

/// node_conv on the complete graph from moments: S_i = M, or M - P_i without self terms.
template <typename Scalar>
ConvResult<Scalar> global_conv(const Positions<Scalar>& positions, const IrrepTensor<Scalar>& h,
                               const ConvConfig& cfg) {
  GlobalMoments<Scalar> m = global_moments(positions, h, cfg);
  const Eigen::Index n = h.nodes();
  RowMatrix<Scalar> s = m.total.transpose().replicate(n, 1);
  if (!cfg.include_self) s -= m.per_node;
  ConvResult<Scalar> result;
  result.counters = m.counters;
  const auto sh = solid_sh<Scalar>(cfg.l_max, positions);
  result.features = detail::fused_finish(m.plan, std::vector<RowMatrix<Scalar>>{std::move(s)}, sh,
                                         cfg.threads, result.counters);
  return result;
}

}  // namespace recouple
