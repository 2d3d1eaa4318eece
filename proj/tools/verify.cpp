#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cli.hpp"
#include "recouple/angular.hpp"
#include "recouple/conv.hpp"
#include "recouple/graph.hpp"
#include "recouple/irreps.hpp"
#include "recouple/oracles.hpp"

namespace recouple::cli {

namespace {

constexpr double kExact = 1e-10;      // equalities that hold up to rounding
constexpr double kEquivariant = 1e-9;  // equalities through a fitted Wigner D-matrix

// Records the worst error and the first input that exceeded `tolerance`.
class Tracker {
 public:
  Tracker(std::string name, double tolerance) : tolerance_(tolerance) { result_.name = std::move(name); }

  template <typename Describe>
  void check(double error, Describe&& describe) {
    result_.worst = std::max(result_.worst, error);
    if (error > tolerance_ || !std::isfinite(error)) {
      if (result_.passed) {
        std::ostringstream s;
        describe(s);
        char e[48];
        std::snprintf(e, sizeof e, " (error %.3e, tolerance %.0e)", error, tolerance_);
        result_.counterexample = s.str() + e;
      }
      result_.passed = false;
    }
  }
  void set_tolerance(double t) { tolerance_ = t; }
  SuiteResult result() const { return result_; }

 private:
  double tolerance_;
  SuiteResult result_;
};

struct Problem {
  PointCloud cloud;
  NeighborGraph graph;
  IrrepTensor<double> h;
  ConvConfig cfg;
};

Problem make_problem(const VerifyOptions& o) {
  Problem p;
  p.cloud = random_cloud(o.n, o.seed);
  p.graph = o.k == "dense" ? dense(o.n) : knn(p.cloud, std::stol(o.k));
  p.cfg.l_max = o.lmax;
  p.cfg.channels = 4;
  CounterRng rng(o.seed, 1);
  p.h = IrrepTensor<double>::random(o.n, IrrepsLayout::uniform(o.lmax, p.cfg.channels), rng);
  return p;
}

std::string where(const VerifyOptions& o) {
  std::ostringstream s;
  s << "n=" << o.n << " k=" << o.k << " lmax=" << o.lmax << " seed=" << o.seed;
  return s.str();
}

VectorX<double> random_block(int l, CounterRng& rng) {
  VectorX<double> v(2 * l + 1);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

SuiteResult angular_suite(const VerifyOptions&) {
  Tracker t("angular", 1e-12);
  const auto& cache = default_cache();
  constexpr int kOracleJ = 3, kOrthoJ = 4;
  for (int j1 = 0; j1 <= kOracleJ; ++j1)
    for (int j2 = 0; j2 <= kOracleJ; ++j2)
      for (int j3 = 0; j3 <= kOracleJ; ++j3)
        for (int j4 = 0; j4 <= kOracleJ; ++j4)
          for (int j5 = 0; j5 <= kOracleJ; ++j5)
            for (int j6 = 0; j6 <= kOracleJ; ++j6)
              t.check(std::abs(cache.wigner6j({j1, j2, j3, j4, j5, j6}) -
                               oracle::sixj(j1, j2, j3, j4, j5, j6)),
                      [&](std::ostream& s) {
                        s << "6j {" << j1 << ' ' << j2 << ' ' << j3 << "; " << j4 << ' ' << j5
                          << ' ' << j6 << "} differs from the four-3j contraction";
                      });
  t.check(oracle::threej_orthogonality_error(kOrthoJ, cache),
          [](std::ostream& s) { s << "3j orthogonality over m1, m2 for j <= 4"; });
  t.check(oracle::threej_completeness_error(kOrthoJ, cache),
          [](std::ostream& s) { s << "3j orthogonality over j3, m3 for j <= 4"; });
  t.check(oracle::sixj_orthogonality_error(kOrthoJ, cache),
          [](std::ostream& s) { s << "6j orthogonality for j <= 4"; });
  return t.result();
}

SuiteResult harmonics_suite(const VerifyOptions& o) {
  Tracker t("harmonics", kEquivariant);
  CounterRng rng(o.seed, 2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto rot = Rotation<double>::random(rng);
    const Eigen::Vector3d r = rng.in_ball(2.0);
    for (int l = 0; l <= o.lmax; ++l) {
      const auto d = wigner_d(l, rot);
      const VectorX<double> lhs = solid_sh_block<double>(l, rot * r);
      const VectorX<double> rhs = d.matrix * solid_sh_block<double>(l, r);
      t.check((lhs - rhs).cwiseAbs().maxCoeff() / std::max(1e-300, rhs.cwiseAbs().maxCoeff()),
              [&](std::ostream& s) { s << "solid_sh(" << l << ", R r) != D(R) solid_sh at trial " << trial; });
      const auto dim = 2 * l + 1;
      t.check((d.matrix.transpose() * d.matrix - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff(),
              [&](std::ostream& s) { s << "D^(" << l << ") not orthogonal at trial " << trial; });
    }
    const Eigen::Vector3d rj = rng.in_ball(2.0);
    t.check(additivity_check<double>(r, rj),
            [&](std::ostream& s) { s << "l = 1 additivity at trial " << trial; });
  }
  return t.result();
}

SuiteResult recoupling_suite(const VerifyOptions& o) {
  Tracker t("recoupling", kExact);
  CounterRng rng(o.seed, 3);
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; b <= 3; ++b)
      for (int c = 0; c <= 3; ++c)
        for (int j = std::abs(b - c); j <= b + c; ++j)
          for (int l = std::abs(a - j); l <= a + j; ++l) {
            const auto A = random_block(a, rng), B = random_block(b, rng), C = random_block(c, rng);
            const VectorX<double> direct = couple<double>(A, a, couple<double>(B, b, C, c, j), j, l);
            VectorX<double> recoupled = VectorX<double>::Zero(2 * l + 1);
            for (int d = std::abs(a - b); d <= a + b; ++d)
              if (triangle_ok(d, c, l))
                recoupled += recoupling_weight(a, b, c, d, j, l) *
                             couple<double>(couple<double>(A, a, B, b, d), d, C, c, l);
            t.check((direct - recoupled).cwiseAbs().maxCoeff(), [&](std::ostream& s) {
              s << "[A x [B x C]^" << j << "]^" << l << " with (a,b,c) = (" << a << ',' << b << ','
                << c << ")";
            });
          }
  return t.result();
}

SuiteResult binomial_suite(const VerifyOptions& o) {
  Tracker t("binomial", kExact);
  const int lmax = std::max(o.lmax, 1);
  const auto& kappa = pair_constants(lmax);
  CounterRng rng(o.seed, 4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector3d ri = rng.in_ball(2.0), rj = rng.in_ball(2.0);
    for (int l = 0; l <= lmax; ++l) {
      const VectorX<double> direct = solid_sh_block<double>(l, ri - rj);
      const VectorX<double> expanded = binomial_expand_sh<double>(l, ri, rj, kappa);
      // Measured on the input scale: near-coincident pairs cancel (|r_i| + |r_j|)^l sized terms.
      const double scale = std::max(1e-300, std::pow(ri.norm() + rj.norm(), l));
      t.check((direct - expanded).norm() / scale,
              [&](std::ostream& s) { s << "degree " << l << " at trial " << trial; });
    }
  }
  return t.result();
}

SuiteResult equivalence_suite(const VerifyOptions& o) {
  Tracker t("equivalence", kExact);
  Problem p = make_problem(o);
  for (auto norm : {Normalization::RawSolid, Normalization::UnitY}) {
    p.cfg.normalization = norm;
    const auto edge = edge_conv(p.graph, p.cloud.positions, p.h, p.cfg);
    const auto node = node_conv(p.graph, p.cloud.positions, p.h, p.cfg);
    const char* label = norm == Normalization::RawSolid ? "raw-solid" : "unit-Y";
    t.check(relative_difference(node.features, edge.features),
            [&](std::ostream& s) { s << "edge_conv vs node_conv (" << label << ") at " << where(o); });
    const auto alpha = AttentionWeights::uniform(p.graph);
    const auto attn = attention_node_conv(p.cloud.positions, p.h, alpha, p.cfg);
    t.check(relative_difference(attn.features, edge.features), [&](std::ostream& s) {
      s << "attention_node_conv vs edge_conv (" << label << ") at " << where(o);
    });
  }
  return t.result();
}

SuiteResult equivariance_suite(const VerifyOptions& o) {
  Tracker t("equivariance", kEquivariant);
  const Problem p = make_problem(o);
  const auto edge = edge_conv(p.graph, p.cloud.positions, p.h, p.cfg).features;
  const auto node = node_conv(p.graph, p.cloud.positions, p.h, p.cfg).features;
  CounterRng rng(o.seed, 5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto rot = Rotation<double>::random(rng);
    const auto positions = rotate_cloud(p.cloud.positions, rot);
    const auto h = rotate(p.h, rot);
    t.check(relative_difference(edge_conv(p.graph, positions, h, p.cfg).features, rotate(edge, rot)),
            [&](std::ostream& s) { s << "edge_conv rotation " << trial << " at " << where(o); });
    t.check(relative_difference(node_conv(p.graph, positions, h, p.cfg).features, rotate(node, rot)),
            [&](std::ostream& s) { s << "node_conv rotation " << trial << " at " << where(o); });
  }
  return t.result();
}

SuiteResult translation_suite(const VerifyOptions& o) {
  Tracker t("translation", kEquivariant);
  const Problem p = make_problem(o);
  const auto edge = edge_conv(p.graph, p.cloud.positions, p.h, p.cfg).features;
  const auto node = node_conv(p.graph, p.cloud.positions, p.h, p.cfg).features;
  CounterRng rng(o.seed, 6);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::RowVector3d shift = rng.in_ball(p.cloud.side).transpose();
    Positions<double> moved = p.cloud.positions.rowwise() + shift;
    t.check(relative_difference(edge_conv(p.graph, moved, p.h, p.cfg).features, edge),
            [&](std::ostream& s) { s << "edge_conv shift " << trial << " at " << where(o); });
    t.check(relative_difference(node_conv(p.graph, moved, p.h, p.cfg).features, node),
            [&](std::ostream& s) { s << "node_conv shift " << trial << " at " << where(o); });
  }
  return t.result();
}

SuiteResult permutation_suite(const VerifyOptions& o) {
  Tracker t("permutation", kExact);
  const Problem p = make_problem(o);
  std::vector<Eigen::Index> perm(o.n);
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng(o.seed, 7);
  for (Eigen::Index i = o.n - 1; i > 0; --i)
    std::swap(perm[i], perm[static_cast<Eigen::Index>(rng.uniform() * (i + 1))]);
  // New node i is old node perm[i].
  std::vector<Eigen::Index> inverse(o.n);
  for (Eigen::Index i = 0; i < o.n; ++i) inverse[perm[i]] = i;
  Positions<double> positions(o.n, 3);
  RowMatrix<double> values(o.n, p.h.layout().dim());
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> indices;
  for (Eigen::Index i = 0; i < o.n; ++i) {
    positions.row(i) = p.cloud.positions.row(perm[i]);
    values.row(i) = p.h.values().row(perm[i]);
    for (const auto j : p.graph.neighbors(perm[i])) indices.push_back(static_cast<std::int32_t>(inverse[j]));
    offsets.push_back(static_cast<std::int64_t>(indices.size()));
  }
  const NeighborGraph graph(GraphKind::Custom, o.n, offsets, indices, false);
  const IrrepTensor<double> h(p.h.layout(), values);
  const auto check = [&](const IrrepTensor<double>& original, const IrrepTensor<double>& permuted,
                         const char* route) {
    RowMatrix<double> expected(o.n, original.layout().dim());
    for (Eigen::Index i = 0; i < o.n; ++i) expected.row(i) = original.values().row(perm[i]);
    t.check(relative_difference(permuted, IrrepTensor<double>(original.layout(), expected)),
            [&](std::ostream& s) { s << route << " relabeling at " << where(o); });
  };
  check(edge_conv(p.graph, p.cloud.positions, p.h, p.cfg).features,
        edge_conv(graph, positions, h, p.cfg).features, "edge_conv");
  check(node_conv(p.graph, p.cloud.positions, p.h, p.cfg).features,
        node_conv(graph, positions, h, p.cfg).features, "node_conv");
  return t.result();
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"angular",     "harmonics",    "recoupling",
                                              "binomial",    "equivalence",  "equivariance",
                                              "translation", "permutation"};
  return names;
}

SuiteResult run_suite(const std::string& name, const VerifyOptions& options) {
  try {
    if (name == "angular") return angular_suite(options);
    if (name == "harmonics") return harmonics_suite(options);
    if (name == "recoupling") return recoupling_suite(options);
    if (name == "binomial") return binomial_suite(options);
    if (name == "equivalence") return equivalence_suite(options);
    if (name == "equivariance") return equivariance_suite(options);
    if (name == "translation") return translation_suite(options);
    if (name == "permutation") return permutation_suite(options);
  } catch (const std::exception& e) {
    SuiteResult r;
    r.name = name;
    r.passed = false;
    r.counterexample = std::string("exception: ") + e.what() + " at " + where(options);
    return r;
  }
  throw std::invalid_argument("unknown suite " + name);
}

int cmd_verify(const VerifyOptions& options, std::ostream& out) {
  std::vector<std::string> names;
  if (options.suite == "all")
    names = suite_names();
  else
    names.push_back(options.suite);

  if (options.corrupt_6j) default_cache().set_sixj_fault_for_testing(1.001);
  std::vector<SuiteResult> results;
  for (const auto& name : names) results.push_back(run_suite(name, options));
  if (options.corrupt_6j) default_cache().set_sixj_fault_for_testing(1.0);

  char line[128];
  std::snprintf(line, sizeof line, "%-14s %-6s %s\n", "suite", "result", "worst error");
  out << line;
  const SuiteResult* first_failure = nullptr;
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-14s %-6s %.3e\n", r.name.c_str(), r.passed ? "PASS" : "FAIL",
                  r.worst);
    out << line;
    if (!r.passed && !first_failure) first_failure = &r;
  }
  if (!first_failure) return kPass;
  out << "first counterexample [" << first_failure->name << "]: " << first_failure->counterexample
      << '\n'
      << "reproduce: recouple verify --suite " << first_failure->name << " --n " << options.n
      << " --k " << options.k << " --lmax " << options.lmax << " --seed " << options.seed
      << (options.corrupt_6j ? " --corrupt-6j" : "") << '\n';
  return kPropertyFailure;
}

}  // namespace recouple::cli
