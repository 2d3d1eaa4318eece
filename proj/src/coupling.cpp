#include "recouple/coupling.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <tuple>

#include "recouple/angular.hpp"

namespace recouple {

namespace {

struct TableRegistry {
  std::shared_mutex mutex;
  std::map<std::tuple<int, int, int>, std::unique_ptr<CouplingTable>> tables;
};

TableRegistry& registry() {
  static TableRegistry r;
  return r;
}

std::unique_ptr<CouplingTable> build_table(int l1, int l2, int l3) {
  auto table = std::make_unique<CouplingTable>();
  table->l1 = l1;
  table->l2 = l2;
  table->l3 = l3;
  for (int m1 = -l1; m1 <= l1; ++m1)
    for (int m2 = -l2; m2 <= l2; ++m2)
      for (int m3 = -l3; m3 <= l3; ++m3) {
        const double v = real_cg(l1, m1, l2, m2, l3, m3);
        if (std::abs(v) > 1e-14)
          table->entries.push_back({static_cast<std::int16_t>(m1 + l1),
                                    static_cast<std::int16_t>(m2 + l2),
                                    static_cast<std::int16_t>(m3 + l3), v});
      }
  return table;
}

}  // namespace

const CouplingTable& coupling_table(int l1, int l2, int l3) {
  if (!triangle_ok(l1, l2, l3))
    throw std::invalid_argument("non-triangular coupling path (" + std::to_string(l1) + ", " +
                                std::to_string(l2) + ", " + std::to_string(l3) + ")");
  auto& reg = registry();
  const auto key = std::make_tuple(l1, l2, l3);
  {
    std::shared_lock lock(reg.mutex);
    const auto it = reg.tables.find(key);
    if (it != reg.tables.end()) return *it->second;
  }
  auto table = build_table(l1, l2, l3);
  std::unique_lock lock(reg.mutex);
  auto [it, inserted] = reg.tables.emplace(key, std::move(table));
  return *it->second;
}

double recoupling_weight(int a, int b, int c, int d, int j, int l) {
  const double sixj = wigner6j({a, b, d, c, l, j});
  if (sixj == 0.0) return 0.0;
  const double phase = ((a + b + c + l) % 2 == 0) ? 1.0 : -1.0;
  const int odd_left = (a + j + l) % 2 + (b + c + j) % 2;
  const int odd_right = (a + b + d) % 2 + (d + c + l) % 2;
  const double basis_sign = (std::abs(odd_left - odd_right) == 2) ? -1.0 : 1.0;
  return basis_sign * phase * std::sqrt((2.0 * d + 1.0) * (2.0 * j + 1.0)) * sixj;
}

}  // namespace recouple
