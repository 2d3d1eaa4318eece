#pragma once

// Equivariant feature containers and the tensor-product primitives on them.
//
// An IrrepTensor stores N rows; each row is the concatenation of its layout's blocks, and a
// block of degree l with c channels is a c x (2l+1) row-major matrix (m fastest).

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recouple/angular.hpp"
#include "recouple/coupling.hpp"
#include "recouple/harmonics.hpp"
#include "recouple/rng.hpp"

namespace recouple {

struct IrrepEntry {
  int degree;
  Eigen::Index channels;
  friend bool operator==(const IrrepEntry&, const IrrepEntry&) = default;
};

class IrrepsLayout {
 public:
  IrrepsLayout() = default;
  explicit IrrepsLayout(std::vector<IrrepEntry> entries) : entries_(std::move(entries)) {
    offsets_.reserve(entries_.size());
    for (const auto& e : entries_) {
      if (e.degree < 0) throw std::invalid_argument("negative degree in layout");
      if (e.channels <= 0) throw std::invalid_argument("channel counts must be positive");
      if (std::count_if(entries_.begin(), entries_.end(),
                        [&](const IrrepEntry& o) { return o.degree == e.degree; }) != 1)
        throw std::invalid_argument("duplicate degree " + std::to_string(e.degree) + " in layout");
      offsets_.push_back(dim_);
      dim_ += e.channels * (2 * e.degree + 1);
    }
  }

  /// Degrees 0..l_max, each with `channels` channels.
  static IrrepsLayout uniform(int l_max, Eigen::Index channels) {
    std::vector<IrrepEntry> e;
    for (int l = 0; l <= l_max; ++l) e.push_back({l, channels});
    return IrrepsLayout(std::move(e));
  }
  static IrrepsLayout single(int degree, Eigen::Index channels = 1) {
    return IrrepsLayout({{degree, channels}});
  }

  const std::vector<IrrepEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  Eigen::Index dim() const { return dim_; }
  Eigen::Index offset(std::size_t entry) const { return offsets_[entry]; }

  /// Spherical dimension s = sum (2l + 1).
  int spherical_dim() const {
    int s = 0;
    for (const auto& e : entries_) s += 2 * e.degree + 1;
    return s;
  }

  std::optional<std::size_t> find(int degree) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].degree == degree) return i;
    return std::nullopt;
  }
  bool contains(int degree) const { return find(degree).has_value(); }

  std::size_t require(int degree) const {
    const auto idx = find(degree);
    if (!idx) throw std::invalid_argument("layout has no degree " + std::to_string(degree));
    return *idx;
  }
  Eigen::Index channels(int degree) const { return entries_[require(degree)].channels; }
  Eigen::Index offset_of(int degree) const { return offsets_[require(degree)]; }

  int max_degree() const {
    int m = -1;
    for (const auto& e : entries_) m = std::max(m, e.degree);
    return m;
  }

  friend bool operator==(const IrrepsLayout& a, const IrrepsLayout& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<IrrepEntry> entries_;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index dim_ = 0;
};

template <typename Scalar>
class IrrepTensor {
 public:
  using Block = Eigen::Map<RowMatrix<Scalar>>;
  using ConstBlock = Eigen::Map<const RowMatrix<Scalar>>;

  IrrepTensor() = default;
  IrrepTensor(Eigen::Index nodes, IrrepsLayout layout)
      : layout_(std::move(layout)), values_(RowMatrix<Scalar>::Zero(nodes, layout_.dim())) {}
  IrrepTensor(IrrepsLayout layout, RowMatrix<Scalar> values)
      : layout_(std::move(layout)), values_(std::move(values)) {
    if (values_.cols() != layout_.dim())
      throw std::invalid_argument("value width does not match layout dimension");
  }

  static IrrepTensor zeros(Eigen::Index nodes, IrrepsLayout layout) {
    return IrrepTensor(nodes, std::move(layout));
  }
  static IrrepTensor random(Eigen::Index nodes, IrrepsLayout layout, CounterRng& rng) {
    IrrepTensor t(nodes, std::move(layout));
    for (Eigen::Index i = 0; i < t.values_.size(); ++i)
      t.values_.data()[i] = static_cast<Scalar>(rng.uniform(-1.0, 1.0));
    return t;
  }

  Eigen::Index nodes() const { return values_.rows(); }
  const IrrepsLayout& layout() const { return layout_; }
  bool empty() const { return layout_.empty(); }
  const RowMatrix<Scalar>& values() const { return values_; }
  RowMatrix<Scalar>& values() { return values_; }

  Scalar* data(Eigen::Index node, int degree) {
    return values_.data() + node * values_.cols() + layout_.offset_of(degree);
  }
  const Scalar* data(Eigen::Index node, int degree) const {
    return values_.data() + node * values_.cols() + layout_.offset_of(degree);
  }
  Block block(Eigen::Index node, int degree) {
    return Block(data(node, degree), layout_.channels(degree), 2 * degree + 1);
  }
  ConstBlock block(Eigen::Index node, int degree) const {
    return ConstBlock(data(node, degree), layout_.channels(degree), 2 * degree + 1);
  }

 private:
  IrrepsLayout layout_;
  RowMatrix<Scalar> values_;
};

/// max |a - b| / max(|b|) over all entries; layouts must agree.
template <typename Scalar>
Scalar relative_difference(const IrrepTensor<Scalar>& a, const IrrepTensor<Scalar>& b) {
  if (!(a.layout() == b.layout()) || a.nodes() != b.nodes())
    throw std::invalid_argument("comparing tensors with different shapes");
  if (a.values().size() == 0) return Scalar(0);
  const Scalar scale = b.values().cwiseAbs().maxCoeff();
  const Scalar diff = (a.values() - b.values()).cwiseAbs().maxCoeff();
  return scale > 0 ? diff / scale : diff;
}

/// A coupling path (l1 x l2 -> l_out) with a scalar weight.
struct PathSpec {
  PathSpec(int l1_, int l2_, int l_out_, double weight_ = 1.0)
      : l1(l1_), l2(l2_), l_out(l_out_), weight(weight_) {
    if (!triangle_ok(l1, l2, l_out))
      throw std::invalid_argument("path (" + std::to_string(l1) + ", " + std::to_string(l2) +
                                  ", " + std::to_string(l_out) + ") violates the triangle rule");
  }
  int l1, l2, l_out;
  double weight;
};

/// Every triangular path between the degrees of two layouts, capped at `l_out_max`.
inline std::vector<PathSpec> all_paths(const IrrepsLayout& a, const IrrepsLayout& b,
                                       int l_out_max) {
  std::vector<PathSpec> paths;
  for (const auto& ea : a.entries())
    for (const auto& eb : b.entries())
      for (int l = std::abs(ea.degree - eb.degree); l <= std::min(l_out_max, ea.degree + eb.degree);
           ++l)
        paths.emplace_back(ea.degree, eb.degree, l);
  return paths;
}

/// Clebsch-Gordan tensor product, channelwise. B may carry a single channel, in which case
/// it is shared by every channel of A.
template <typename Scalar>
IrrepTensor<Scalar> cg_tp(const IrrepTensor<Scalar>& a, const IrrepTensor<Scalar>& b,
                          const std::vector<PathSpec>& paths) {
  if (a.nodes() != b.nodes()) throw std::invalid_argument("cg_tp: node counts differ");
  std::map<int, Eigen::Index> out_channels;
  for (const auto& p : paths) {
    const Eigen::Index ca = a.layout().channels(p.l1);
    const Eigen::Index cb = b.layout().channels(p.l2);
    if (cb != 1 && cb != ca)
      throw std::invalid_argument("cg_tp: channel counts are incompatible");
    auto [it, inserted] = out_channels.emplace(p.l_out, ca);
    if (!inserted && it->second != ca)
      throw std::invalid_argument("cg_tp: paths into one degree disagree on channels");
  }
  std::vector<IrrepEntry> entries;
  for (const auto& [l, c] : out_channels) entries.push_back({l, c});
  IrrepTensor<Scalar> out(a.nodes(), IrrepsLayout(std::move(entries)));
  for (const auto& p : paths) {
    const CouplingTable& table = coupling_table(p.l1, p.l2, p.l_out);
    const Eigen::Index channels = a.layout().channels(p.l1);
    const bool broadcast = b.layout().channels(p.l2) == 1 && channels != 1;
    for (Eigen::Index i = 0; i < a.nodes(); ++i) {
      if (broadcast)
        couple_broadcast<Scalar>(table, a.data(i, p.l1), b.data(i, p.l2), out.data(i, p.l_out),
                                 channels, static_cast<Scalar>(p.weight));
      else
        couple_paired<Scalar>(table, a.data(i, p.l1), b.data(i, p.l2), out.data(i, p.l_out),
                              channels, static_cast<Scalar>(p.weight));
    }
  }
  return out;
}

/// Degree-l component of A. A missing degree yields an empty tensor rather than an error.
template <typename Scalar>
IrrepTensor<Scalar> project(const IrrepTensor<Scalar>& a, int degree) {
  const auto idx = a.layout().find(degree);
  if (!idx) return IrrepTensor<Scalar>(a.nodes(), IrrepsLayout());
  const auto& entry = a.layout().entries()[*idx];
  const Eigen::Index width = entry.channels * (2 * degree + 1);
  RowMatrix<Scalar> v = a.values().middleCols(a.layout().offset(*idx), width);
  return IrrepTensor<Scalar>(IrrepsLayout({entry}), std::move(v));
}

/// Single-channel coupling of two blocks into degree lc.
template <typename Scalar>
VectorX<Scalar> couple(const VectorX<Scalar>& a, int la, const VectorX<Scalar>& b, int lb,
                       int lc) {
  VectorX<Scalar> out = VectorX<Scalar>::Zero(2 * lc + 1);
  couple_paired<Scalar>(coupling_table(la, lb, lc), a.data(), b.data(), out.data(), 1,
                        Scalar(1));
  return out;
}

/// Applies D^(l)(R) to every block of every node.
template <typename Scalar>
IrrepTensor<Scalar> rotate(const IrrepTensor<Scalar>& h, const Rotation<Scalar>& rot) {
  IrrepTensor<Scalar> out = h;
  for (const auto& e : h.layout().entries()) {
    const auto d = wigner_d<Scalar>(e.degree, rot);
    for (Eigen::Index i = 0; i < h.nodes(); ++i)
      out.block(i, e.degree) = h.block(i, e.degree) * d.matrix.transpose();
  }
  return out;
}

/// Per-degree channel mixing: block_out = W_l * block_in. Degrees without a weight are dropped.
template <typename Scalar>
IrrepTensor<Scalar> linear_mix(const IrrepTensor<Scalar>& h,
                               const std::map<int, RowMatrix<Scalar>>& weights) {
  std::vector<IrrepEntry> entries;
  for (const auto& e : h.layout().entries()) {
    const auto it = weights.find(e.degree);
    if (it == weights.end()) continue;
    if (it->second.cols() != e.channels)
      throw std::invalid_argument("linear_mix: weight width does not match channels");
    entries.push_back({e.degree, it->second.rows()});
  }
  IrrepTensor<Scalar> out(h.nodes(), IrrepsLayout(std::move(entries)));
  for (const auto& e : out.layout().entries()) {
    const auto& w = weights.at(e.degree);
    for (Eigen::Index i = 0; i < h.nodes(); ++i) out.block(i, e.degree) = w * h.block(i, e.degree);
  }
  return out;
}

/// Couples an l = 1 block with itself along (1,1->2), (2,1->3), ..., (L-1,1->L). The result
/// is kappa_L * solid_sh(L, v) with kappa depending only on L.
template <typename Scalar>
VectorX<Scalar> tensor_power_project(const VectorX<Scalar>& v, int power, int degree) {
  if (v.size() != 3) throw std::invalid_argument("tensor_power_project expects an l = 1 block");
  if (power != degree) throw std::invalid_argument("tensor_power_project requires power == degree");
  if (degree == 0) return VectorX<Scalar>::Ones(1);
  VectorX<Scalar> current = v;
  for (int l = 2; l <= degree; ++l) current = couple<Scalar>(current, l - 1, v, 1, l);
  return current;
}

/// kappa(u, l) with [R^(u)(r) x R^(l-u)(r)]^(l) = kappa(u, l) R^(l)(r), normalized harmonics.
struct PairConstants {
  int l_max = -1;
  Eigen::MatrixXd kappa;  // (l_max + 1) x (l_max + 1), row u, column l, valid for u <= l
  double operator()(int u, int l) const { return kappa(u, l); }
};

/// Calibrates on 32 fixed random vectors; throws ConventionError if the ratio is not
/// constant to 1e-10 relative or vanishes.
PairConstants calibrate_pair_constants(int l_max);

/// Memoized calibration for a given cutoff.
const PairConstants& pair_constants(int l_max);

/// Recoupled product [A x [B x C]^(j_fixed)]^(l_out) computed from the left-associated
/// products AB_d = [A x B]^(d) as sum_d w_d [AB_d x C]^(l_out), w_d = recoupling_weight().
///
/// `ab` must hold a block for every d with triangle(a, b, d) and triangle(d, c, l_out); `c`
/// must be a single-degree tensor (one channel or as many as `ab`). The sum over all j
/// without the constraint is a different operator and is not what this computes.
template <typename Scalar>
IrrepTensor<Scalar> wigner6j_tp(const IrrepTensor<Scalar>& ab, int a, int b,
                                const IrrepTensor<Scalar>& c_tensor, int l_out, int j_fixed) {
  if (c_tensor.layout().size() != 1)
    throw std::invalid_argument("wigner6j_tp: third operand must carry a single degree");
  if (ab.nodes() != c_tensor.nodes()) throw std::invalid_argument("wigner6j_tp: node counts differ");
  const int c = c_tensor.layout().entries()[0].degree;
  Eigen::Index channels = -1;
  std::vector<PathSpec> paths;
  for (int d = std::abs(a - b); d <= a + b; ++d) {
    if (!triangle_ok(d, c, l_out)) continue;
    if (!ab.layout().contains(d))
      throw std::invalid_argument("wigner6j_tp: missing intermediate degree " + std::to_string(d));
    const Eigen::Index cd = ab.layout().channels(d);
    if (channels >= 0 && cd != channels)
      throw std::invalid_argument("wigner6j_tp: intermediate blocks disagree on channels");
    channels = cd;
    const double w = recoupling_weight(a, b, c, d, j_fixed, l_out);
    if (w != 0.0) paths.emplace_back(d, c, l_out, w);
  }
  if (channels < 0) channels = ab.layout().empty() ? 1 : ab.layout().entries()[0].channels;
  if (paths.empty()) return IrrepTensor<Scalar>(ab.nodes(), IrrepsLayout::single(l_out, channels));
  return cg_tp(ab, c_tensor, paths);
}

}  // namespace recouple
