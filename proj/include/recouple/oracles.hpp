#pragma once

// Slow reference evaluations used to cross-check the angular module. Not used at runtime.

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "recouple/angular.hpp"

namespace recouple::oracle {

/// 6j symbol as the contraction of four 3j symbols over all magnetic indices:
///
///   {j1 j2 j3; j4 j5 j6} = sum_m (-1)^(sum_k j_k - m_k)
///       (j1 j2 j3; -m1 -m2 -m3) (j1 j5 j6; m1 -m5 m6) (j4 j2 j6; m4 m2 -m6) (j4 j5 j3; -m4 m5 m3)
///
/// The selection rules leave m1, m2, m5 free; m3, m6 and m4 follow from them.
inline double sixj(int j1, int j2, int j3, int j4, int j5, int j6) {
  double sum = 0.0;
  for (int m1 = -j1; m1 <= j1; ++m1)
    for (int m2 = -j2; m2 <= j2; ++m2)
      for (int m5 = -j5; m5 <= j5; ++m5) {
        const int m3 = -m1 - m2;
        const int m6 = m5 - m1;
        const int m4 = m6 - m2;
        if (std::abs(m3) > j3 || std::abs(m6) > j6 || std::abs(m4) > j4) continue;
        if (-m4 + m5 + m3 != 0) continue;
        const int phase = (j1 - m1) + (j2 - m2) + (j3 - m3) + (j4 - m4) + (j5 - m5) + (j6 - m6);
        const double term = default_cache().wigner3j({j1, j2, j3, -m1, -m2, -m3}) *
                            default_cache().wigner3j({j1, j5, j6, m1, -m5, m6}) *
                            default_cache().wigner3j({j4, j2, j6, m4, m2, -m6}) *
                            default_cache().wigner3j({j4, j5, j3, -m4, m5, m3});
        sum += (phase % 2 == 0) ? term : -term;
      }
  return sum;
}

/// max |sum_{m1,m2} (2j3+1) 3j(m3) 3j(m3') - delta| over all j1, j2, j3, j3' <= j_max.
inline double threej_orthogonality_error(int j_max, const CoefficientCache& cache) {
  double worst = 0.0;
  for (int j1 = 0; j1 <= j_max; ++j1)
    for (int j2 = 0; j2 <= j_max; ++j2)
      for (int j3 = std::abs(j1 - j2); j3 <= std::min(j1 + j2, j_max); ++j3)
        for (int k3 = std::abs(j1 - j2); k3 <= std::min(j1 + j2, j_max); ++k3)
          for (int m3 = -std::min(j3, k3); m3 <= std::min(j3, k3); ++m3) {
            // Both symbols need m1 + m2 = -m3, so mismatched m3 terms vanish identically.
            double s = 0.0;
            for (int m1 = -j1; m1 <= j1; ++m1) {
              const int m2 = -m1 - m3;
              if (std::abs(m2) > j2) continue;
              s += (2 * j3 + 1) * cache.wigner3j({j1, j2, j3, m1, m2, m3}) *
                   cache.wigner3j({j1, j2, k3, m1, m2, m3});
            }
            worst = std::max(worst, std::abs(s - (j3 == k3 ? 1.0 : 0.0)));
          }
  return worst;
}

/// The other orthogonality form: sum_{j3,m3} (2j3+1) 3j(m1,m2) 3j(m1',m2') = delta delta.
inline double threej_completeness_error(int j_max, const CoefficientCache& cache) {
  double worst = 0.0;
  for (int j1 = 0; j1 <= j_max; ++j1)
    for (int j2 = 0; j2 <= j_max; ++j2)
      for (int m1 = -j1; m1 <= j1; ++m1)
        for (int m2 = -j2; m2 <= j2; ++m2)
          for (int n1 = -j1; n1 <= j1; ++n1)
            for (int n2 = -j2; n2 <= j2; ++n2) {
              if (m1 + m2 != n1 + n2) continue;  // otherwise every term vanishes
              double s = 0.0;
              for (int j3 = std::abs(j1 - j2); j3 <= j1 + j2; ++j3) {
                const int m3 = -m1 - m2;
                if (std::abs(m3) > j3) continue;
                s += (2 * j3 + 1) * cache.wigner3j({j1, j2, j3, m1, m2, m3}) *
                     cache.wigner3j({j1, j2, j3, n1, n2, m3});
              }
              const double expected = (m1 == n1 && m2 == n2) ? 1.0 : 0.0;
              worst = std::max(worst, std::abs(s - expected));
            }
  return worst;
}

/// max |sum_{j3} (2j3+1)(2j6+1) {j1 j2 j3; j4 j5 j6}{j1 j2 j3; j4 j5 j6'} - delta Delta Delta|.
inline double sixj_orthogonality_error(int j_max, const CoefficientCache& cache) {
  double worst = 0.0;
  for (int j1 = 0; j1 <= j_max; ++j1)
    for (int j2 = 0; j2 <= j_max; ++j2)
      for (int j4 = 0; j4 <= j_max; ++j4)
        for (int j5 = 0; j5 <= j_max; ++j5)
          for (int j6 = 0; j6 <= j_max; ++j6)
            for (int k6 = 0; k6 <= j_max; ++k6) {
              // Terms with j3 > j_max are cut off; only rows whose sum is complete count.
              if (j1 + j2 > j_max || j4 + j5 > j_max) continue;
              double s = 0.0;
              for (int j3 = 0; j3 <= j_max; ++j3)
                s += (2 * j3 + 1) * (2 * j6 + 1) * cache.wigner6j({j1, j2, j3, j4, j5, j6}) *
                     cache.wigner6j({j1, j2, j3, j4, j5, k6});
              const double expected =
                  (j6 == k6 && triangle_ok(j1, j5, j6) && triangle_ok(j4, j2, j6)) ? 1.0 : 0.0;
              worst = std::max(worst, std::abs(s - expected));
            }
  return worst;
}

}  // namespace recouple::oracle
