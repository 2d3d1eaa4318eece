#include "recouple/harmonics.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include <boost/integer/common_factor.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace recouple {

namespace {

namespace mp = boost::multiprecision;
using Monomial = std::tuple<int, int, int>;
using Polynomial = std::map<Monomial, mp::cpp_int>;

mp::cpp_int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  mp::cpp_int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

mp::cpp_int falling(int n, int k) {  // n! / (n-k)!
  mp::cpp_int r = 1;
  for (int i = 0; i < k; ++i) r *= (n - i);
  return r;
}

Polynomial multiply(const Polynomial& p, const Polynomial& q) {
  Polynomial out;
  for (const auto& [mp_, cp] : p)
    for (const auto& [mq, cq] : q) {
      const Monomial m{std::get<0>(mp_) + std::get<0>(mq), std::get<1>(mp_) + std::get<1>(mq),
                       std::get<2>(mp_) + std::get<2>(mq)};
      out[m] += cp * cq;
    }
  return out;
}

// Re / Im of (x + i y)^m.
Polynomial azimuthal(int m, bool imaginary) {
  Polynomial out;
  for (int p = 0; p <= m; ++p) {
    const int ypow = m - p;  // i^ypow
    const bool is_imag = ypow % 2 == 1;
    if (is_imag != imaginary) continue;
    const int sign = ((ypow / 2) % 2 == 0) ? 1 : -1;
    out[{p, ypow, 0}] += sign * binomial(m, p);
  }
  return out;
}

// 2^l r^(l-m) d^m P_l / dx^m (z / r) as an integer polynomial in x, y, z.
Polynomial legendre_part(int l, int m) {
  Polynomial out;
  for (int k = 0; 2 * k <= l - m; ++k) {
    mp::cpp_int c = binomial(l, k) * binomial(2 * l - 2 * k, l) * falling(l - 2 * k, m);
    if (k % 2 == 1) c = -c;
    // r^(2k) expanded via the trinomial theorem.
    for (int a = 0; a <= k; ++a)
      for (int b = 0; a + b <= k; ++b) {
        const int e = k - a - b;
        const mp::cpp_int multinom = binomial(k, a) * binomial(k - a, b);
        out[{2 * a, 2 * b, 2 * e + (l - 2 * k - m)}] += c * multinom;
      }
  }
  return out;
}

mp::cpp_int content(const Polynomial& p) {
  mp::cpp_int g = 0;
  for (const auto& [m, c] : p)
    if (c != 0) g = boost::integer::gcd(g, mp::abs(c));
  return g;
}

double factorial_ratio(int l, int m) {  // (l - m)! / (l + m)!
  double r = 1.0;
  for (int k = l - m + 1; k <= l + m; ++k) r /= k;
  return r;
}

HarmonicConstants build(int l_max) {
  HarmonicConstants c;
  c.l_max = l_max;
  const int n = (l_max + 1) * (l_max + 1);
  c.normalization.resize(n);
  c.raw_scale.resize(n);
  for (int l = 0; l <= l_max; ++l)
    for (int m = -l; m <= l; ++m) {
      const int am = std::abs(m);
      const double norm = std::sqrt((m == 0 ? 1.0 : 2.0) * (2.0 * l + 1.0) /
                                    (4.0 * std::numbers::pi) * factorial_ratio(l, am));
      const Polynomial q = multiply(azimuthal(am, m < 0), legendre_part(l, am));
      const double g = content(q).convert_to<double>();
      const int idx = l * l + l + m;
      c.normalization[idx] = norm;
      c.raw_scale[idx] = norm * g * std::ldexp(1.0, -l);
    }
  return c;
}

}  // namespace

const HarmonicConstants& harmonic_constants(int l_max) {
  static std::mutex mutex;
  static std::map<int, HarmonicConstants> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(l_max);
  if (it == cache.end()) it = cache.emplace(l_max, build(l_max)).first;
  return it->second;
}

}  // namespace recouple
