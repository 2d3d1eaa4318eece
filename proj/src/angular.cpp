#include "recouple/angular.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "recouple/errors.hpp"

namespace recouple {

namespace mp = boost::multiprecision;

bool triangle_ok(int a, int b, int c) {
  return a >= 0 && b >= 0 && c >= 0 && std::abs(a - b) <= c && c <= a + b;
}

namespace {

const mp::cpp_int& factorial(int n) {
  static const std::vector<mp::cpp_int> table = [] {
    std::vector<mp::cpp_int> f(256);
    f[0] = 1;
    for (int k = 1; k < 256; ++k) f[k] = f[k - 1] * k;
    return f;
  }();
  if (n < 0 || n >= static_cast<int>(table.size()))
    throw CapacityError("factorial argument out of table range: " + std::to_string(n));
  return table[n];
}

// sign(sum) * sqrt(sum^2 * radicand), rounded once.
double signed_sqrt_product(const mp::cpp_rational& sum, const mp::cpp_rational& radicand) {
  if (sum == 0 || radicand == 0) return 0.0;
  const mp::cpp_rational square = sum * sum * radicand;
  using Float = mp::cpp_bin_float_50;
  const Float magnitude =
      mp::sqrt(Float(mp::numerator(square)) / Float(mp::denominator(square)));
  const double value = magnitude.convert_to<double>();
  return sum < 0 ? -value : value;
}

// Triangle coefficient squared: (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!
mp::cpp_rational delta_squared(int a, int b, int c) {
  return mp::cpp_rational(factorial(a + b - c) * factorial(a - b + c) * factorial(-a + b + c),
                          factorial(a + b + c + 1));
}

bool sixj_triads_ok(const SixJKey& k) {
  return triangle_ok(k.j1, k.j2, k.j3) && triangle_ok(k.j1, k.j5, k.j6) &&
         triangle_ok(k.j4, k.j2, k.j6) && triangle_ok(k.j4, k.j5, k.j3);
}

bool threej_allowed(const TripleKey& k) {
  if (k.j1 < 0 || k.j2 < 0 || k.j3 < 0) return false;
  if (std::abs(k.m1) > k.j1 || std::abs(k.m2) > k.j2 || std::abs(k.m3) > k.j3) return false;
  if (k.m1 + k.m2 + k.m3 != 0) return false;
  return triangle_ok(k.j1, k.j2, k.j3);
}

std::uint64_t pack3(const TripleKey& k) {
  auto b = [](int v) { return static_cast<std::uint64_t>(v & 0xff); };
  return b(k.j1) | b(k.j2) << 8 | b(k.j3) << 16 | b(k.m1 + 128) << 24 | b(k.m2 + 128) << 32 |
         b(k.m3 + 128) << 40;
}

std::uint64_t pack6(const SixJKey& k) {
  auto b = [](int v) { return static_cast<std::uint64_t>(v & 0xff); };
  return b(k.j1) | b(k.j2) << 8 | b(k.j3) << 16 | b(k.j4) << 24 | b(k.j5) << 32 | b(k.j6) << 40;
}

TripleKey unpack3(std::uint64_t p) {
  auto f = [p](int shift) { return static_cast<int>((p >> shift) & 0xff); };
  return {f(0), f(8), f(16), f(24) - 128, f(32) - 128, f(40) - 128};
}

struct Canonical3 {
  TripleKey key;
  int sign;
};

// Even column permutations keep the value; odd ones and m-negation multiply by (-1)^J.
Canonical3 canonicalize(const TripleKey& k) {
  const int parity = ((k.j1 + k.j2 + k.j3) % 2 == 0) ? 1 : -1;
  const std::array<int, 3> j{k.j1, k.j2, k.j3};
  const std::array<int, 3> m{k.m1, k.m2, k.m3};
  static constexpr std::array<std::array<int, 3>, 6> perms{
      {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}}};
  Canonical3 best{k, 1};
  auto as_tuple = [](const TripleKey& t) {
    return std::array<int, 6>{t.j1, t.j2, t.j3, t.m1, t.m2, t.m3};
  };
  for (int p = 0; p < 6; ++p) {
    for (int neg = 0; neg < 2; ++neg) {
      const auto& pi = perms[p];
      const int s = neg ? -1 : 1;
      TripleKey t{j[pi[0]], j[pi[1]], j[pi[2]], s * m[pi[0]], s * m[pi[1]], s * m[pi[2]]};
      int sign = 1;
      if (p >= 3) sign *= parity;
      if (neg) sign *= parity;
      if (as_tuple(t) < as_tuple(best.key)) best = {t, sign};
    }
  }
  return best;
}

// Tetrahedral symmetry: any column permutation, and exchanging upper and lower entries in
// two of the three columns.
SixJKey canonicalize(const SixJKey& k) {
  const std::array<std::array<int, 2>, 3> cols{{{k.j1, k.j4}, {k.j2, k.j5}, {k.j3, k.j6}}};
  static constexpr std::array<std::array<int, 3>, 6> perms{
      {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}}};
  static constexpr std::array<std::array<bool, 3>, 4> flips{
      {{false, false, false}, {true, true, false}, {true, false, true}, {false, true, true}}};
  std::array<int, 6> best{k.j1, k.j2, k.j3, k.j4, k.j5, k.j6};
  for (const auto& pi : perms) {
    for (const auto& fl : flips) {
      std::array<int, 6> t{};
      for (int c = 0; c < 3; ++c) {
        const auto& col = cols[pi[c]];
        t[c] = fl[c] ? col[1] : col[0];
        t[c + 3] = fl[c] ? col[0] : col[1];
      }
      best = std::min(best, t);
    }
  }
  return {best[0], best[1], best[2], best[3], best[4], best[5]};
}

}  // namespace

namespace exact {

double wigner3j(const TripleKey& k) {
  if (!threej_allowed(k)) return 0.0;
  const int j1 = k.j1, j2 = k.j2, j3 = k.j3, m1 = k.m1, m2 = k.m2, m3 = k.m3;

  mp::cpp_rational radicand = delta_squared(j1, j2, j3);
  radicand *= factorial(j1 + m1) * factorial(j1 - m1) * factorial(j2 + m2) *
              factorial(j2 - m2) * factorial(j3 + m3) * factorial(j3 - m3);

  // z runs over every integer keeping all six factorial arguments nonnegative.
  const int z_min = std::max({0, j2 - j3 - m1, j1 - j3 + m2});
  const int z_max = std::min({j1 + j2 - j3, j1 - m1, j2 + m2});
  mp::cpp_rational sum = 0;
  for (int z = z_min; z <= z_max; ++z) {
    const mp::cpp_int denom = factorial(z) * factorial(j1 + j2 - j3 - z) *
                              factorial(j1 - m1 - z) * factorial(j2 + m2 - z) *
                              factorial(j3 - j2 + m1 + z) * factorial(j3 - j1 - m2 + z);
    const mp::cpp_rational term(1, denom);
    if (z % 2 == 0)
      sum += term;
    else
      sum -= term;
  }
  const int phase_exp = j1 - j2 - m3;
  if (phase_exp % 2 != 0) sum = -sum;
  return signed_sqrt_product(sum, radicand);
}

// Racah single-sum formula:
//
//   {j1 j2 j3; j4 j5 j6} = D(j1 j2 j3) D(j1 j5 j6) D(j4 j2 j6) D(j4 j5 j3)
//       * sum_t (-1)^t (t+1)! / [ (t-a1)!(t-a2)!(t-a3)!(t-a4)! (b1-t)!(b2-t)!(b3-t)! ]
//
// with triad sums a1 = j1+j2+j3, a2 = j1+j5+j6, a3 = j4+j2+j6, a4 = j4+j5+j3, column-pair
// sums b1 = j1+j2+j4+j5, b2 = j2+j3+j5+j6, b3 = j3+j1+j6+j4, and
// D(a b c) = sqrt((a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!). Equal to
// (-1)^(j1+j2+j4+j5) W(j1 j2 j5 j4; j3 j6).
double wigner6j(const SixJKey& k) {
  if (!sixj_triads_ok(k)) return 0.0;
  const int a1 = k.j1 + k.j2 + k.j3;
  const int a2 = k.j1 + k.j5 + k.j6;
  const int a3 = k.j4 + k.j2 + k.j6;
  const int a4 = k.j4 + k.j5 + k.j3;
  const int b1 = k.j1 + k.j2 + k.j4 + k.j5;
  const int b2 = k.j2 + k.j3 + k.j5 + k.j6;
  const int b3 = k.j3 + k.j1 + k.j6 + k.j4;

  const mp::cpp_rational radicand = delta_squared(k.j1, k.j2, k.j3) *
                                    delta_squared(k.j1, k.j5, k.j6) *
                                    delta_squared(k.j4, k.j2, k.j6) *
                                    delta_squared(k.j4, k.j5, k.j3);
  const int t_min = std::max({a1, a2, a3, a4});
  const int t_max = std::min({b1, b2, b3});
  mp::cpp_rational sum = 0;
  for (int t = t_min; t <= t_max; ++t) {
    const mp::cpp_int denom = factorial(t - a1) * factorial(t - a2) * factorial(t - a3) *
                              factorial(t - a4) * factorial(b1 - t) * factorial(b2 - t) *
                              factorial(b3 - t);
    const mp::cpp_rational term(factorial(t + 1), denom);
    if (t % 2 == 0)
      sum += term;
    else
      sum -= term;
  }
  return signed_sqrt_product(sum, radicand);
}

}  // namespace exact

CoefficientCache::CoefficientCache(int j_max) : j_max_(j_max) {
  if (j_max < 0 || 4 * j_max + 2 >= 256)
    throw CapacityError("unsupported J_max " + std::to_string(j_max));
}

void CoefficientCache::check_capacity(int j) const {
  if (j > j_max_)
    throw CapacityError("degree " + std::to_string(j) + " exceeds J_max " +
                        std::to_string(j_max_));
}

double CoefficientCache::lookup_3j(std::uint64_t canonical, const TripleKey& key) const {
  if (frozen()) {
    const auto it = threej_.find(canonical);
    return it != threej_.end() ? it->second : exact::wigner3j(key);
  }
  {
    std::shared_lock lock(mutex_);
    const auto it = threej_.find(canonical);
    if (it != threej_.end()) return it->second;
  }
  const double value = exact::wigner3j(key);
  std::unique_lock lock(mutex_);
  threej_.emplace(canonical, value);
  return value;
}

double CoefficientCache::lookup_6j(std::uint64_t canonical, const SixJKey& key) const {
  if (frozen()) {
    const auto it = sixj_.find(canonical);
    return it != sixj_.end() ? it->second : exact::wigner6j(key);
  }
  {
    std::shared_lock lock(mutex_);
    const auto it = sixj_.find(canonical);
    if (it != sixj_.end()) return it->second;
  }
  const double value = exact::wigner6j(key);
  std::unique_lock lock(mutex_);
  sixj_.emplace(canonical, value);
  return value;
}

double CoefficientCache::wigner3j(const TripleKey& key) const {
  check_capacity(std::max({key.j1, key.j2, key.j3}));
  if (!threej_allowed(key)) return 0.0;
  const Canonical3 c = canonicalize(key);
  return c.sign * lookup_3j(pack3(c.key), c.key);
}

double CoefficientCache::wigner6j(const SixJKey& key) const {
  check_capacity(std::max({key.j1, key.j2, key.j3, key.j4, key.j5, key.j6}));
  if (!sixj_triads_ok(key)) return 0.0;
  const SixJKey c = canonicalize(key);
  return lookup_6j(pack6(c), c) * sixj_fault_.load(std::memory_order_relaxed);
}

double CoefficientCache::clebsch_gordan(int l1, int m1, int l2, int m2, int l3, int m3) const {
  if (m1 + m2 != m3) return 0.0;
  const double w = wigner3j({l1, l2, l3, m1, m2, -m3});
  if (w == 0.0) return 0.0;
  const int phase = ((l1 - l2 + m3) % 2 == 0) ? 1 : -1;
  return phase * std::sqrt(2.0 * l3 + 1.0) * w;
}

void CoefficientCache::warm_up(int j) {
  if (frozen()) return;
  check_capacity(j);
  for (int j1 = 0; j1 <= j; ++j1)
    for (int j2 = 0; j2 <= j; ++j2)
      for (int j3 = std::abs(j1 - j2); j3 <= std::min(j, j1 + j2); ++j3)
        for (int m1 = -j1; m1 <= j1; ++m1)
          for (int m2 = -j2; m2 <= j2; ++m2) {
            const int m3 = -m1 - m2;
            if (std::abs(m3) <= j3) wigner3j({j1, j2, j3, m1, m2, m3});
          }
  for (int j1 = 0; j1 <= j; ++j1)
    for (int j2 = 0; j2 <= j; ++j2)
      for (int j3 = std::abs(j1 - j2); j3 <= std::min(j, j1 + j2); ++j3)
        for (int j4 = 0; j4 <= j; ++j4)
          for (int j5 = 0; j5 <= j; ++j5) {
            if (!triangle_ok(j4, j5, j3)) continue;
            for (int j6 = 0; j6 <= j; ++j6) {
              const SixJKey key{j1, j2, j3, j4, j5, j6};
              if (sixj_triads_ok(key)) wigner6j(key);
            }
          }
}

void CoefficientCache::freeze() { frozen_.store(true, std::memory_order_release); }

std::size_t CoefficientCache::size_3j() const {
  std::shared_lock lock(mutex_);
  return threej_.size();
}

std::size_t CoefficientCache::size_6j() const {
  std::shared_lock lock(mutex_);
  return sixj_.size();
}

void CoefficientCache::dump_csv(std::ostream& out) const {
  std::map<std::uint64_t, double> sorted;
  {
    std::shared_lock lock(mutex_);
    sorted.insert(threej_.begin(), threej_.end());
  }
  out << "j1,j2,j3,m1,m2,m3,value\n";
  char buf[64];
  for (const auto& [packed, value] : sorted) {
    const TripleKey k = unpack3(packed);
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out << k.j1 << ',' << k.j2 << ',' << k.j3 << ',' << k.m1 << ',' << k.m2 << ',' << k.m3
        << ',' << buf << '\n';
  }
}

void CoefficientCache::set_sixj_fault_for_testing(double scale) {
  sixj_fault_.store(scale, std::memory_order_relaxed);
}

CoefficientCache& default_cache() {
  static CoefficientCache cache(kDefaultJMax);
  return cache;
}

double wigner3j(const TripleKey& key) { return default_cache().wigner3j(key); }
double wigner6j(const SixJKey& key) { return default_cache().wigner6j(key); }
double clebsch_gordan(int l1, int m1, int l2, int m2, int l3, int m3) {
  return default_cache().clebsch_gordan(l1, m1, l2, m2, l3, m3);
}

Eigen::MatrixXcd real_to_complex_basis(int l) {
  const int dim = 2 * l + 1;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(dim, dim);
  const double s = 1.0 / std::sqrt(2.0);
  const std::complex<double> i(0.0, 1.0);
  u(l, l) = 1.0;
  for (int m = 1; m <= l; ++m) {
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    u(l + m, l + m) = sign * s;
    u(l + m, l - m) = s;
    u(l - m, l - m) = i * s;
    u(l - m, l + m) = -i * sign * s;
  }
  return u;
}

namespace {

// Nonzero (column, value) pairs of row `m` of U.
struct BasisRow {
  int count = 0;
  std::array<int, 2> col{};
  std::array<std::complex<double>, 2> val{};
};

BasisRow basis_row(int l, int m) {
  const double s = 1.0 / std::sqrt(2.0);
  const std::complex<double> i(0.0, 1.0);
  BasisRow row;
  if (m == 0) {
    row.count = 1;
    row.col[0] = 0;
    row.val[0] = 1.0;
  } else if (m > 0) {
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    row.count = 2;
    row.col = {m, -m};
    row.val = {sign * s, s};
  } else {
    const int a = -m;
    const double sign = (a % 2 == 0) ? 1.0 : -1.0;
    row.count = 2;
    row.col = {-a, a};
    row.val = {i * s, -i * sign * s};
  }
  (void)l;
  return row;
}

}  // namespace

std::complex<double> real_cg_complex(int l1, int m1, int l2, int m2, int l3, int m3) {
  const auto& cache = default_cache();
  cache.wigner3j({l1, l2, l3, 0, 0, 0});  // capacity check
  if (!triangle_ok(l1, l2, l3)) return 0.0;
  const BasisRow r1 = basis_row(l1, m1), r2 = basis_row(l2, m2), r3 = basis_row(l3, m3);
  std::complex<double> total = 0.0;
  for (int a = 0; a < r1.count; ++a)
    for (int b = 0; b < r2.count; ++b) {
      const int big_m1 = r1.col[a], big_m2 = r2.col[b];
      for (int c = 0; c < r3.count; ++c) {
        const int big_m3 = r3.col[c];
        if (big_m1 + big_m2 != big_m3) continue;
        const double cg = cache.clebsch_gordan(l1, big_m1, l2, big_m2, l3, big_m3);
        if (cg == 0.0) continue;
        total += r3.val[c] * cg * std::conj(r1.val[a]) * std::conj(r2.val[b]);
      }
    }
  return total;
}

double real_cg(int l1, int m1, int l2, int m2, int l3, int m3) {
  const std::complex<double> z = real_cg_complex(l1, m1, l2, m2, l3, m3);
  const bool even = (l1 + l2 + l3) % 2 == 0;
  const double kept = even ? z.real() : z.imag();
  const double residue = even ? z.imag() : z.real();
  if (std::abs(residue) > 1e-12)
    throw ConventionError("real-basis coupling (" + std::to_string(l1) + "," +
                          std::to_string(l2) + "," + std::to_string(l3) +
                          ") has a residue of " + std::to_string(residue));
  return kept;
}

}  // namespace recouple
