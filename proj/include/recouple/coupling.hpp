#pragma once

// Sparse real-basis coupling tables and the contraction kernels built on them.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace recouple {

/// One nonzero of a real coupling table; m indices are stored as offsets m + l.
struct CouplingEntry {
  std::int16_t m1, m2, m3;
  double value;
};

struct CouplingTable {
  int l1 = 0, l2 = 0, l3 = 0;
  std::vector<CouplingEntry> entries;
};

/// Memoized sparse table for the real-basis path (l1 x l2 -> l3), built from real_cg() on
/// the default coefficient cache. The reference stays valid for the life of the process.
/// Throws std::invalid_argument if the triple is not triangular.
const CouplingTable& coupling_table(int l1, int l2, int l3);

/// Real-basis recoupling weight w_d such that, for single-degree inputs A (a), B (b), C (c),
///
///   [A x [B x C]^(j)]^(l) = sum_d w_d [[A x B]^(d) x C]^(l).
///
/// In the complex basis this is (-1)^(a+b+c+l) sqrt((2d+1)(2j+1)) {a b d; c l j}. The
/// real tables pick up a factor -i on odd paths, which turns into an extra sign of -1
/// exactly when the odd-path counts of the two coupling trees differ by two.
double recoupling_weight(int a, int b, int c, int d, int j, int l);

/// out(c, m3) += weight * sum_e value_e * a(c, m1_e) * b(m2_e), for c in [0, channels).
/// `a` and `out` are channel-major with m contiguous; `b` is a single shared block.
template <typename Scalar>
void couple_broadcast(const CouplingTable& table, const Scalar* a, const Scalar* b, Scalar* out,
                      Eigen::Index channels, Scalar weight) {
  const Eigen::Index d1 = 2 * table.l1 + 1;
  const Eigen::Index d3 = 2 * table.l3 + 1;
  thread_local std::vector<Scalar> scratch;
  scratch.resize(table.entries.size());
  for (std::size_t e = 0; e < table.entries.size(); ++e) {
    const auto& entry = table.entries[e];
    scratch[e] = weight * static_cast<Scalar>(entry.value) * b[entry.m2];
  }
  for (Eigen::Index c = 0; c < channels; ++c) {
    const Scalar* ac = a + c * d1;
    Scalar* oc = out + c * d3;
    for (std::size_t e = 0; e < table.entries.size(); ++e) {
      const auto& entry = table.entries[e];
      oc[entry.m3] += scratch[e] * ac[entry.m1];
    }
  }
}

/// Channelwise variant: out(c, m3) += weight * sum_e value_e * a(c, m1_e) * b(c, m2_e).
template <typename Scalar>
void couple_paired(const CouplingTable& table, const Scalar* a, const Scalar* b, Scalar* out,
                   Eigen::Index channels, Scalar weight) {
  const Eigen::Index d1 = 2 * table.l1 + 1;
  const Eigen::Index d2 = 2 * table.l2 + 1;
  const Eigen::Index d3 = 2 * table.l3 + 1;
  for (Eigen::Index c = 0; c < channels; ++c) {
    const Scalar* ac = a + c * d1;
    const Scalar* bc = b + c * d2;
    Scalar* oc = out + c * d3;
    for (const auto& entry : table.entries)
      oc[entry.m3] += weight * static_cast<Scalar>(entry.value) * ac[entry.m1] * bc[entry.m2];
  }
}

}  // namespace recouple
