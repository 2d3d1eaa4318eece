#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>

#include "recouple/graph.hpp"

using namespace recouple;

namespace {

std::set<std::int32_t> as_set(std::span<const std::int32_t> s) { return {s.begin(), s.end()}; }

bool same_sets(const NeighborGraph& a, const NeighborGraph& b) {
  if (a.nodes() != b.nodes()) return false;
  for (Eigen::Index i = 0; i < a.nodes(); ++i)
    if (as_set(a.neighbors(i)) != as_set(b.neighbors(i))) return false;
  return true;
}

PointCloud line_cloud(std::initializer_list<double> xs) {
  PointCloud cloud;
  cloud.positions.setZero(static_cast<Eigen::Index>(xs.size()), 3);
  Eigen::Index i = 0;
  for (double x : xs) cloud.positions(i++, 0) = x;
  return cloud;
}

}  // namespace

TEST_CASE("random clouds") {
  const auto single = random_cloud(1, 42);
  CHECK(single.size() == 1);
  CHECK(single.side == doctest::Approx(1.0));
  CHECK(single.positions.cwiseAbs().maxCoeff() <= 0.5);

  const auto a = random_cloud(1000, 9), b = random_cloud(1000, 9);
  CHECK(a.positions == b.positions);
  CHECK(a.side == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(a.positions.cwiseAbs().maxCoeff() <= 5.0);
  CHECK(random_cloud(1000, 10).positions != a.positions);
  CHECK(random_cloud(1000, 9, 8.0).side == doctest::Approx(5.0).epsilon(1e-14));
  CHECK_THROWS_AS(random_cloud(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(random_cloud(5, 1, 0.0), std::invalid_argument);
}

TEST_CASE("knn tie-break on collinear equidistant points") {
  const auto g = knn(line_cloud({0.0, 1.0, 2.0}), 1);
  REQUIRE(g.neighbors(1).size() == 1);
  CHECK(g.neighbors(1)[0] == 0);
  CHECK(g.neighbors(0)[0] == 1);
  CHECK(g.neighbors(2)[0] == 1);
  // Reversing the index order flips which endpoint wins.
  const auto h = knn(line_cloud({2.0, 1.0, 0.0}), 1);
  CHECK(h.neighbors(1)[0] == 0);
}

TEST_CASE("dense graphs") {
  const auto g = dense(2);
  CHECK(g.kind() == GraphKind::Dense);
  CHECK(g.edges() == 2);
  CHECK(g.neighbors(0)[0] == 1);
  CHECK(g.neighbors(1)[0] == 0);
  CHECK(dense(1).edges() == 0);
  const auto s = dense(3, true);
  CHECK(s.edges() == 9);
  CHECK(s.include_self());
}

TEST_CASE("knn with k >= N-1 is dense") {
  const auto cloud = random_cloud(20, 3);
  CHECK(same_sets(knn(cloud, 19), dense(20)));
  CHECK(same_sets(knn(cloud, 50), dense(20)));
  CHECK_THROWS_AS(knn(cloud, 0), std::invalid_argument);
}

TEST_CASE("knn property sweep") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto cloud = random_cloud(100, seed);
    for (Eigen::Index k : {1, 4, 8, 32}) {
      const auto g = knn(cloud, k);
      CHECK(g.edges() == static_cast<std::size_t>(100 * k));
      for (Eigen::Index i = 0; i < 100; ++i) {
        const auto list = g.neighbors(i);
        const auto sorted = g.sorted_neighbors(i);
        REQUIRE(list.size() == static_cast<std::size_t>(k));
        CHECK(std::is_sorted(sorted.begin(), sorted.end()));
        CHECK(as_set(list) == as_set(sorted));
        CHECK(std::find(list.begin(), list.end(), i) == list.end());
        double prev = 0.0, worst_inside = 0.0;
        for (auto j : list) {
          const double d = (cloud.positions.row(i) - cloud.positions.row(j)).norm();
          CHECK(d >= prev);
          prev = d;
          worst_inside = std::max(worst_inside, d);
        }
        // No excluded point is strictly closer than the farthest kept one.
        const auto kept = as_set(list);
        for (Eigen::Index j = 0; j < 100; ++j)
          if (j != i && !kept.count(static_cast<std::int32_t>(j)))
            CHECK((cloud.positions.row(i) - cloud.positions.row(j)).norm() >= worst_inside);
      }
    }
  }
  const auto a = knn(random_cloud(100, 1), 8), b = knn(random_cloud(100, 1), 8);
  CHECK(a.sorted_indices() == b.sorted_indices());
}

TEST_CASE("radius graphs") {
  const auto cloud = random_cloud(30, 4);
  CHECK(same_sets(radius(cloud, std::numeric_limits<double>::infinity(), 29), dense(30)));

  const auto spaced = line_cloud({0.0, 1.0, 2.5, 4.0});
  CHECK(radius(spaced, 0.5).edges() == 0);
  const auto g = radius(spaced, 1.5);
  CHECK(as_set(g.neighbors(0)) == std::set<std::int32_t>{1});
  CHECK(as_set(g.neighbors(1)) == std::set<std::int32_t>{0, 2});
  CHECK(as_set(g.neighbors(2)) == std::set<std::int32_t>{1, 3});
  const auto capped = radius(spaced, 1.5, 1);
  CHECK(capped.neighbors(1)[0] == 0);
  CHECK(capped.neighbors(2)[0] == 1);
  CHECK_THROWS_AS(radius(spaced, -1.0), std::invalid_argument);
}

TEST_CASE("custom graphs are validated") {
  CHECK_NOTHROW(NeighborGraph(GraphKind::Custom, 3, {0, 1, 1, 3}, {2, 0, 1}, false));
  CHECK_THROWS_AS(NeighborGraph(GraphKind::Custom, 3, {0, 1, 1}, {2}, false), std::invalid_argument);
  CHECK_THROWS_AS(NeighborGraph(GraphKind::Custom, 2, {0, 2, 2}, {1, 1}, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(NeighborGraph(GraphKind::Custom, 2, {0, 1, 1}, {5}, false), std::out_of_range);
  CHECK_THROWS_AS(NeighborGraph(GraphKind::Custom, 2, {0, 1, 1}, {0}, false), std::invalid_argument);
  CHECK_NOTHROW(NeighborGraph(GraphKind::Custom, 2, {0, 1, 1}, {0}, true));

  const auto g = knn(random_cloud(10, 5), 3).with_self_loops();
  CHECK(g.include_self());
  CHECK(g.edges() == 40);
  for (Eigen::Index i = 0; i < 10; ++i) CHECK(as_set(g.neighbors(i)).count(static_cast<std::int32_t>(i)));
}

TEST_CASE("cloud files round-trip bit-exactly") {
  const auto cloud = random_cloud(64, 11);
  std::stringstream buffer;
  save_cloud(buffer, cloud);
  const auto back = load_cloud(buffer);
  CHECK(back.positions == cloud.positions);

  const auto path = std::filesystem::temp_directory_path() / "recouple_cloud_roundtrip.txt";
  save_cloud(path.string(), cloud);
  CHECK(load_cloud(path.string()).positions == cloud.positions);
  std::filesystem::remove(path);

  std::istringstream commented("# header\n1 2 3\n\n  4 5 6 # trailing\n");
  const auto parsed = load_cloud(commented);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed.positions(1, 2) == 6.0);

  std::istringstream bad("1 2 3\n1 2\n");
  CHECK_THROWS_WITH_AS(load_cloud(bad), doctest::Contains("line 2"), std::runtime_error);
  std::istringstream junk("1 2 x\n");
  CHECK_THROWS_WITH_AS(load_cloud(junk), doctest::Contains("line 1"), std::runtime_error);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(load_cloud(empty), std::runtime_error);
}
