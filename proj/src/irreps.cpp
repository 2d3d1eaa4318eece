#include "recouple/irreps.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "recouple/errors.hpp"

namespace recouple {

PairConstants calibrate_pair_constants(int l_max) {
  constexpr int kSamples = 32;
  constexpr double kTolerance = 1e-10;
  PairConstants out;
  out.l_max = l_max;
  out.kappa = Eigen::MatrixXd::Zero(l_max + 1, l_max + 1);

  CounterRng rng(0x6b617070ULL);
  std::vector<Eigen::VectorXd> harmonics;
  for (int s = 0; s < kSamples; ++s) {
    // Stay away from the origin so every degree has a well-scaled value.
    Eigen::Vector3d r = rng.on_sphere() * rng.uniform(0.5, 1.5);
    Eigen::VectorXd all(sh_size(l_max));
    solid_sh_into<double>(l_max, r.x(), r.y(), r.z(), all.data());
    harmonics.push_back(std::move(all));
  }
  for (int l = 0; l <= l_max; ++l)
    for (int u = 0; u <= l; ++u) {
      std::vector<Eigen::VectorXd> products;
      double num = 0.0, den = 0.0, scale = 0.0;
      for (const auto& y : harmonics) {
        const Eigen::VectorXd yu = y.segment(sh_offset(u), 2 * u + 1);
        const Eigen::VectorXd yv = y.segment(sh_offset(l - u), 2 * (l - u) + 1);
        const Eigen::VectorXd yl = y.segment(sh_offset(l), 2 * l + 1);
        Eigen::VectorXd p = couple<double>(yu, u, yv, l - u, l);
        num += p.dot(yl);
        den += yl.squaredNorm();
        scale = std::max(scale, p.cwiseAbs().maxCoeff());
        products.push_back(std::move(p));
      }
      const double kappa = num / den;
      if (!(std::abs(kappa) > 1e-12))
        throw ConventionError("vanishing pair constant for (" + std::to_string(u) + ", " +
                              std::to_string(l) + ")");
      for (std::size_t s = 0; s < harmonics.size(); ++s) {
        const Eigen::VectorXd yl = harmonics[s].segment(sh_offset(l), 2 * l + 1);
        const double residual = (products[s] - kappa * yl).cwiseAbs().maxCoeff();
        if (residual > kTolerance * scale)
          throw ConventionError("pair constant for (" + std::to_string(u) + ", " +
                                std::to_string(l) + ") is not a constant ratio");
      }
      out.kappa(u, l) = kappa;
    }
  return out;
}

const PairConstants& pair_constants(int l_max) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<PairConstants>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[l_max];
  if (!slot) slot = std::make_unique<PairConstants>(calibrate_pair_constants(l_max));
  return *slot;
}

}  // namespace recouple
