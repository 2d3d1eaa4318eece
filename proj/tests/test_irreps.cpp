#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "recouple/irreps.hpp"

using namespace recouple;
using doctest::Approx;

namespace {

IrrepTensor<double> pure(int degree, Eigen::Index nodes, Eigen::Index channels, CounterRng& rng) {
  return IrrepTensor<double>::random(nodes, IrrepsLayout::single(degree, channels), rng);
}

double max_abs(const IrrepTensor<double>& t) {
  return t.values().size() ? t.values().cwiseAbs().maxCoeff() : 0.0;
}

// Ratio got / expected after checking every component shares it.
double common_ratio(const VectorX<double>& got, const VectorX<double>& expected, double tol) {
  Eigen::Index pivot;
  expected.cwiseAbs().maxCoeff(&pivot);
  const double ratio = got(pivot) / expected(pivot);
  CHECK((got - ratio * expected).cwiseAbs().maxCoeff() <= tol * got.cwiseAbs().maxCoeff());
  return ratio;
}

}  // namespace

TEST_CASE("layout bookkeeping") {
  const IrrepsLayout layout({{0, 3}, {2, 2}, {1, 4}});
  CHECK(layout.dim() == 3 * 1 + 2 * 5 + 4 * 3);
  CHECK(layout.spherical_dim() == 1 + 5 + 3);
  CHECK(layout.offset_of(2) == 3);
  CHECK(layout.offset_of(1) == 13);
  CHECK(layout.max_degree() == 2);
  CHECK_FALSE(layout.contains(3));
  CHECK_THROWS_AS(layout.channels(3), std::invalid_argument);
  CHECK_THROWS_AS(IrrepsLayout({{-1, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(IrrepsLayout({{1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(IrrepsLayout({{1, 2}, {1, 2}}), std::invalid_argument);
  CHECK(IrrepsLayout::uniform(3, 5).dim() == 5 * 16);

  IrrepTensor<double> t(4, layout);
  CHECK(t.values().size() == 4 * layout.dim());
  t.block(2, 1)(3, 2) = 7.0;
  CHECK(t.values()(2, 13 + 3 * 3 + 2) == 7.0);
  CHECK_THROWS_AS(IrrepTensor<double>(layout, RowMatrix<double>::Zero(2, 5)), std::invalid_argument);
}

TEST_CASE("paths validate the triangle rule") {
  CHECK_THROWS_AS(PathSpec(1, 1, 3), std::invalid_argument);
  CHECK_NOTHROW(PathSpec(2, 1, 3));
  CHECK(PathSpec(1, 2, 2).weight == 1.0);
}

TEST_CASE("multiplicity one of the top degree") {
  for (int l1 = 0; l1 <= 6; ++l1)
    for (int l2 = 0; l2 <= 6; ++l2) {
      const auto paths = all_paths(IrrepsLayout::single(l1), IrrepsLayout::single(l2), 20);
      CHECK(std::count_if(paths.begin(), paths.end(),
                          [&](const PathSpec& p) { return p.l_out == l1 + l2; }) == 1);
      CHECK(paths.size() == static_cast<std::size_t>(2 * std::min(l1, l2) + 1));
      CHECK_THROWS_AS(PathSpec(l1, l2, l1 + l2 + 1), std::invalid_argument);
    }
}

TEST_CASE("cg_tp with a scalar operand copies the other one") {
  CounterRng rng(1);
  for (int l = 0; l <= 4; ++l) {
    IrrepTensor<double> ones(5, IrrepsLayout::single(0, 3));
    ones.values().setOnes();
    const auto b = pure(l, 5, 3, rng);
    const auto out = cg_tp(ones, b, {PathSpec(0, l, l)});
    CHECK((out.values() - b.values()).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("coupling a vector with itself to degree 1 vanishes") {
  CounterRng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector3d r = rng.in_ball(2.0);
    RowMatrix<double> v = solid_sh_block<double>(1, r).transpose();
    const IrrepTensor<double> a(IrrepsLayout::single(1), v);
    CHECK(max_abs(cg_tp(a, a, {PathSpec(1, 1, 1)})) < 1e-15);
  }
}

TEST_CASE("cg_tp broadcasting and channel checks") {
  CounterRng rng(3);
  const auto a = pure(2, 4, 3, rng);
  const auto b = pure(1, 4, 1, rng);
  IrrepTensor<double> wide(4, IrrepsLayout::single(1, 3));
  for (Eigen::Index i = 0; i < 4; ++i)
    for (int c = 0; c < 3; ++c) wide.block(i, 1).row(c) = b.block(i, 1).row(0);
  const std::vector<PathSpec> paths{{2, 1, 1}, {2, 1, 2}, {2, 1, 3, 0.5}};
  CHECK(relative_difference(cg_tp(a, b, paths), cg_tp(a, wide, paths)) < 1e-15);
  CHECK_THROWS_AS(cg_tp(a, pure(1, 4, 2, rng), paths), std::invalid_argument);
  CHECK_THROWS_AS(cg_tp(a, pure(1, 3, 1, rng), paths), std::invalid_argument);
  CHECK_THROWS_AS(cg_tp(a, b, {PathSpec(0, 1, 1)}), std::invalid_argument);
}

TEST_CASE("projection") {
  CounterRng rng(4);
  const auto h = IrrepTensor<double>::random(6, IrrepsLayout::uniform(3, 2), rng);
  const auto p2 = project(h, 2);
  CHECK(p2.layout() == IrrepsLayout::single(2, 2));
  CHECK(relative_difference(project(p2, 2), p2) == 0.0);
  CHECK(project(h, 5).empty());
  CHECK(project(h, 5).nodes() == 6);

  const auto a = pure(1, 6, 2, rng), b = pure(1, 6, 2, rng);
  const auto full = cg_tp(a, b, all_paths(a.layout(), b.layout(), 2));
  CHECK(relative_difference(project(full, 2), cg_tp(a, b, {PathSpec(1, 1, 2)})) == 0.0);
}

TEST_CASE("rotation preserves block norms and every product is equivariant") {
  CounterRng rng(5);
  const auto layout = IrrepsLayout({{0, 2}, {1, 2}, {2, 2}, {3, 2}});
  for (int trial = 0; trial < 10; ++trial) {
    const auto rot = Rotation<double>::random(rng);
    const auto a = IrrepTensor<double>::random(3, layout, rng);
    const auto b = IrrepTensor<double>::random(3, layout, rng);
    const auto ra = rotate(a, rot), rb = rotate(b, rot);
    for (const auto& e : layout.entries())
      for (Eigen::Index i = 0; i < 3; ++i)
        CHECK(ra.block(i, e.degree).norm() == Approx(a.block(i, e.degree).norm()).epsilon(1e-9));

    const auto paths = all_paths(layout, layout, 3);
    // Paths into one output degree need equal channels, which holds here.
    CHECK(relative_difference(cg_tp(ra, rb, paths), rotate(cg_tp(a, b, paths), rot)) < 1e-9);

    std::map<int, RowMatrix<double>> weights;
    for (int l = 0; l <= 3; ++l) weights[l] = RowMatrix<double>::Random(3, 2);
    CHECK(relative_difference(linear_mix(ra, weights), rotate(linear_mix(a, weights), rot)) < 1e-9);

    const auto ab = cg_tp(project(a, 1), project(b, 2), all_paths(IrrepsLayout::single(1, 2),
                                                                    IrrepsLayout::single(2, 2), 3));
    const auto c = project(b, 1);
    const auto lhs = wigner6j_tp(rotate(ab, rot), 1, 2, rotate(c, rot), 2, 2);
    CHECK(relative_difference(lhs, rotate(wigner6j_tp(ab, 1, 2, c, 2, 2), rot)) < 1e-9);
  }
}

TEST_CASE("linear mixing shapes") {
  CounterRng rng(6);
  const auto h = IrrepTensor<double>::random(2, IrrepsLayout::uniform(1, 3), rng);
  std::map<int, RowMatrix<double>> weights{{1, RowMatrix<double>::Ones(5, 3)}};
  const auto out = linear_mix(h, weights);
  CHECK(out.layout() == IrrepsLayout::single(1, 5));
  CHECK(out.block(0, 1).row(4).isApprox(h.block(0, 1).colwise().sum()));
  weights[0] = RowMatrix<double>::Ones(1, 2);
  CHECK_THROWS_AS(linear_mix(h, weights), std::invalid_argument);
}

TEST_CASE("tensor powers project onto solid harmonics") {
  const Eigen::Vector3d r(1, 2, 3);
  const VectorX<double> v = solid_sh_block<double>(1, r);
  CHECK((tensor_power_project<double>(v, 1, 1) - v).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(tensor_power_project<double>(v, 3, 2), std::invalid_argument);

  VectorX<double> raw2(5);
  raw2 << 2, 6, 13, 3, -3;
  // The output lives in the normalized basis, so rescale the raw golden list.
  raw2.array() *= Eigen::Map<const Eigen::ArrayXd>(harmonic_constants(2).raw_scale.data() + 4, 5);
  common_ratio(tensor_power_project<double>(v, 2, 2), raw2, 1e-10);

  CounterRng rng(7);
  for (int l = 1; l <= 6; ++l) {
    double first = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::Vector3d x = rng.in_ball(2.0);
      const double k = common_ratio(tensor_power_project<double>(solid_sh_block<double>(1, x), l, l),
                                    solid_sh_block<double>(l, x), 1e-10);
      if (trial == 0) first = k;
      CHECK(k == Approx(first).epsilon(1e-10));
    }
  }
}

TEST_CASE("top projection does not depend on the coupling tree") {
  CounterRng rng(8);
  // Every full binary tree over the leaves [lo, hi), coupled to the maximal degree.
  std::function<std::vector<VectorX<double>>(const std::vector<VectorX<double>>&, int, int)> trees =
      [&](const std::vector<VectorX<double>>& leaves, int lo, int hi) {
        if (hi - lo == 1) return std::vector<VectorX<double>>{leaves[lo]};
        std::vector<VectorX<double>> out;
        for (int split = lo + 1; split < hi; ++split)
          for (const auto& left : trees(leaves, lo, split))
            for (const auto& right : trees(leaves, split, hi))
              out.push_back(couple<double>(left, split - lo, right, hi - split, hi - lo));
        return out;
      };
  for (int k = 2; k <= 4; ++k) {
    std::vector<VectorX<double>> leaves;
    for (int i = 0; i < k; ++i) leaves.push_back(solid_sh_block<double>(1, rng.in_ball(2.0)));
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    const VectorX<double> reference = trees(leaves, 0, k).front();
    do {
      std::vector<VectorX<double>> permuted;
      for (int i : order) permuted.push_back(leaves[i]);
      for (const auto& t : trees(permuted, 0, k))
        CHECK((t - reference).cwiseAbs().maxCoeff() < 1e-10);
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

TEST_CASE("pair constants") {
  const auto kappa = calibrate_pair_constants(6);
  const double y00 = solid_sh_block<double>(0, Eigen::Vector3d::Zero().eval())(0);
  for (int l = 0; l <= 6; ++l) {
    CHECK(kappa(0, l) == Approx(y00 * real_cg(0, 0, l, 0, l, 0)).epsilon(1e-12));
    CHECK(kappa(l, l) == Approx(kappa(0, l)).epsilon(1e-12));
    for (int u = 0; u <= l; ++u) {
      CHECK(std::abs(kappa(u, l)) > 1e-6);
      CHECK(kappa(u, l) == Approx(kappa(l - u, l)).epsilon(1e-12));
    }
  }
  CHECK(&pair_constants(4) == &pair_constants(4));
  CHECK(pair_constants(4).kappa(2, 4) == kappa(2, 4));
}

TEST_CASE("recoupled product: scalar third operand reduces to a projection") {
  CounterRng rng(9);
  const auto a = pure(2, 3, 2, rng), b = pure(1, 3, 2, rng);
  const auto ab = cg_tp(a, b, all_paths(a.layout(), b.layout(), 3));
  IrrepTensor<double> one(3, IrrepsLayout::single(0));
  one.values().setOnes();
  for (int l_out = 1; l_out <= 3; ++l_out) {
    const auto out = wigner6j_tp(ab, 2, 1, one, l_out, 1);
    const auto proj = project(ab, l_out);
    const double ratio = out.values()(0, 0) / proj.values()(0, 0);
    CHECK(std::abs(ratio) > 1e-6);
    CHECK((out.values() - ratio * proj.values()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("recoupled product equals the right-associated coupling") {
  CounterRng rng(10);
  SUBCASE("(a,b,c) = (1,1,1), j = 2, l = 1") {
    const auto a = pure(1, 4, 1, rng), b = pure(1, 4, 1, rng), c = pure(1, 4, 1, rng);
    const auto direct = cg_tp(a, cg_tp(b, c, {PathSpec(1, 1, 2)}), {PathSpec(1, 2, 1)});
    const auto ab = cg_tp(a, b, all_paths(a.layout(), b.layout(), 2));
    CHECK((wigner6j_tp(ab, 1, 1, c, 1, 2).values() - direct.values()).cwiseAbs().maxCoeff() <
          1e-10);
  }
  SUBCASE("every degree triple up to 3") {
    double worst = 0.0;
    for (int a = 0; a <= 3; ++a)
      for (int b = 0; b <= 3; ++b)
        for (int c = 0; c <= 3; ++c)
          for (int j = std::abs(b - c); j <= b + c; ++j)
            for (int l = std::abs(a - j); l <= a + j; ++l) {
              const auto ta = pure(a, 2, 1, rng), tb = pure(b, 2, 1, rng), tc = pure(c, 2, 1, rng);
              const auto direct = cg_tp(ta, cg_tp(tb, tc, {PathSpec(b, c, j)}), {PathSpec(a, j, l)});
              const auto ab = cg_tp(ta, tb, all_paths(ta.layout(), tb.layout(), a + b));
              const auto re = wigner6j_tp(ab, a, b, tc, l, j);
              worst = std::max(worst, (re.values() - direct.values()).cwiseAbs().maxCoeff());
            }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("recoupled product rejects missing intermediate degrees") {
  CounterRng rng(11);
  const auto a = pure(1, 2, 1, rng), b = pure(1, 2, 1, rng), c = pure(1, 2, 1, rng);
  const auto partial = cg_tp(a, b, {PathSpec(1, 1, 2)});
  CHECK_THROWS_AS(wigner6j_tp(partial, 1, 1, c, 1, 2), std::invalid_argument);
  CHECK_THROWS_AS(wigner6j_tp(partial, 1, 1, IrrepTensor<double>::random(2, IrrepsLayout::uniform(1, 1), rng), 1, 2),
                  std::invalid_argument);
}

TEST_CASE("single precision tensors") {
  CounterRng rng(12);
  const auto a = IrrepTensor<float>::random(3, IrrepsLayout::uniform(2, 2), rng);
  const auto b = IrrepTensor<float>::random(3, IrrepsLayout::single(1, 1), rng);
  const auto paths = all_paths(a.layout(), b.layout(), 2);
  const auto rot = Rotation<float>::random(rng);
  const auto lhs = cg_tp(rotate(a, rot), rotate(b, rot), paths);
  CHECK(relative_difference(lhs, rotate(cg_tp(a, b, paths), rot)) < 1e-5f);
}
