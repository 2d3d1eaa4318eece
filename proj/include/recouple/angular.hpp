#pragma once

// Wigner 3j / 6j symbols and Clebsch-Gordan coefficients for integer angular momenta.
//
// Phase convention is Condon-Shortley throughout. The complex-basis CG coefficient is
//
//   C^{l3 m3}_{l1 m1, l2 m2} = (-1)^(l1 - l2 + m3) sqrt(2 l3 + 1) (l1 l2 l3; m1 m2 -m3)
//
// and the real-basis coupling is obtained by conjugating the complex tensor with the
// per-degree change of basis returned by real_to_complex_basis().

#include <atomic>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <shared_mutex>
#include <unordered_map>

#include <Eigen/Dense>

namespace recouple {

inline constexpr int kDefaultJMax = 12;

/// |a - b| <= c <= a + b for nonnegative a, b, c.
bool triangle_ok(int a, int b, int c);

struct TripleKey {
  int j1, j2, j3;
  int m1, m2, m3;
  friend bool operator==(const TripleKey&, const TripleKey&) = default;
};

/// {j1 j2 j3; j4 j5 j6}
struct SixJKey {
  int j1, j2, j3;
  int j4, j5, j6;
  friend bool operator==(const SixJKey&, const SixJKey&) = default;
};

namespace exact {

// Direct Racah evaluation, no cache and no capacity check. Factorial products and the
// alternating sum are carried out in exact rational arithmetic; the only rounding is the
// final square root.
double wigner3j(const TripleKey& key);
double wigner6j(const SixJKey& key);

}  // namespace exact

/// Memoized 3j/6j values keyed by their canonical (symmetry-reduced) form.
///
/// Thread safety: all lookups may be issued concurrently. Until freeze() is called the
/// map is guarded by a shared mutex; after freeze() reads are lock-free and keys that
/// were not warmed are evaluated directly without being stored.
class CoefficientCache {
 public:
  explicit CoefficientCache(int j_max = kDefaultJMax);

  CoefficientCache(const CoefficientCache&) = delete;
  CoefficientCache& operator=(const CoefficientCache&) = delete;

  int j_max() const { return j_max_; }

  double wigner3j(const TripleKey& key) const;
  double wigner6j(const SixJKey& key) const;
  double clebsch_gordan(int l1, int m1, int l2, int m2, int l3, int m3) const;

  /// Populates every selection-rule-allowed 3j and 6j with all degrees <= j.
  void warm_up(int j);
  void freeze();
  bool frozen() const { return frozen_.load(std::memory_order_acquire); }

  std::size_t size_3j() const;
  std::size_t size_6j() const;

  /// Writes `j1,j2,j3,m1,m2,m3,value` for every stored (canonical) 3j entry.
  void dump_csv(std::ostream& out) const;

  /// Test hook: every nonzero 6j returned afterwards is multiplied by `scale`.
  void set_sixj_fault_for_testing(double scale);

 private:
  void check_capacity(int j) const;
  double lookup_3j(std::uint64_t canonical, const TripleKey& key) const;
  double lookup_6j(std::uint64_t canonical, const SixJKey& key) const;

  int j_max_;
  std::atomic<bool> frozen_{false};
  std::atomic<double> sixj_fault_{1.0};
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::uint64_t, double> threej_;
  mutable std::unordered_map<std::uint64_t, double> sixj_;
};

/// Process-wide cache used by the free functions below and by the coupling tables.
CoefficientCache& default_cache();

double wigner3j(const TripleKey& key);
double wigner6j(const SixJKey& key);
double clebsch_gordan(int l1, int m1, int l2, int m2, int l3, int m3);

/// Unitary U with real = U * complex for degree l; rows and columns indexed m + l.
///
///   m > 0 : Y_m = ((-1)^m Y^m + Y^-m) / sqrt(2)
///   m < 0 : Y_m = i (Y^-|m| - (-1)^|m| Y^|m|) / sqrt(2)
///
/// which makes the real harmonics free of the Condon-Shortley sign (e.g. Y_{1,1} ~ +x).
Eigen::MatrixXcd real_to_complex_basis(int l);

/// Raw conjugated coefficient U3 C conj(U1) conj(U2). Purely real when l1 + l2 + l3 is
/// even and purely imaginary when it is odd.
std::complex<double> real_cg_complex(int l1, int m1, int l2, int m2, int l3, int m3);

/// Real coupling coefficient: the real part for even l1 + l2 + l3, the imaginary part
/// for odd. Throws ConventionError if the discarded part exceeds 1e-12.
double real_cg(int l1, int m1, int l2, int m2, int l3, int m3);

}  // namespace recouple
