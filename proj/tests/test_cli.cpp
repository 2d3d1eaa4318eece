#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "recouple/report.hpp"

using namespace recouple;

namespace {

struct Invocation {
  int code;
  std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "recouple");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << contents;
  return path;
}

std::vector<BenchRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_bench_csv(in);
}

}  // namespace

TEST_CASE("verify with defaults passes every suite") {
  const auto r = invoke({"verify"});
  CHECK(r.code == cli::kPass);
  for (const auto& name : cli::suite_names()) CHECK(r.out.find(name) != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("verify a single suite") {
  const auto r = invoke({"verify", "--suite", "equivalence", "--n", "32", "--k", "8", "--lmax",
                         "3", "--seed", "7"});
  CHECK(r.code == cli::kPass);
  CHECK(r.out.find("equivalence") != std::string::npos);
  CHECK(invoke({"verify", "--suite", "equivalence", "--k", "dense", "--n", "12"}).code ==
        cli::kPass);
}

TEST_CASE("corrupted 6j symbols are caught") {
  const auto r = invoke({"verify", "--suite", "recoupling", "--corrupt-6j"});
  CHECK(r.code == cli::kPropertyFailure);
  CHECK(r.out.find("recoupling") != std::string::npos);
  CHECK(r.out.find("FAIL") != std::string::npos);
  CHECK(r.out.find("--corrupt-6j") != std::string::npos);
  // The fault is scoped to that run.
  CHECK(invoke({"verify", "--suite", "recoupling"}).code == cli::kPass);
}

TEST_CASE("bench rows and node counts independent of k") {
  const auto r = invoke({"bench", "--n", "100,200,400", "--k", "8,32", "--lmax", "2",
                         "--channels", "4", "--repeats", "5"});
  REQUIRE(r.code == cli::kPass);
  const auto rows = parse(r.out);
  CHECK(rows.size() == 12);
  std::map<long, std::set<std::uint64_t>> node_tp;
  for (const auto& row : rows) {
    CHECK_FALSE(row.error);
    CHECK(row.median_s > 0);
    if (row.mode == "node") node_tp[row.n].insert(row.tp_count);
  }
  REQUIRE(node_tp.size() == 3);
  for (const auto& [n, counts] : node_tp) CHECK(counts.size() == 1);
  const auto t100 = *node_tp[100].begin(), t200 = *node_tp[200].begin(),
             t400 = *node_tp[400].begin();
  CHECK(t200 - t100 == (t400 - t200) / 2);

  const auto edge_only = invoke({"bench", "--mode", "edge", "--n", "50", "--k", "dense",
                                 "--lmax", "1..2", "--channels", "2"});
  CHECK(edge_only.code == cli::kPass);
  CHECK(parse(edge_only.out).size() == 2);
}

TEST_CASE("report on a bench CSV") {
  std::ostringstream csv;
  csv << kBenchHeader << '\n';
  for (long n : {250, 500, 1000, 2000}) {
    const double x = static_cast<double>(n);
    csv << "edge," << n << ",dense,3,8,5," << 1e-7 * x * x << "," << n * (n - 1) << ",1,1\n";
    csv << "node," << n << ",dense,3,8,5," << 1e-5 * x << "," << n << ",1,1\n";
  }
  const auto path = temp_file("recouple_report.csv", csv.str());
  const auto r = invoke({"report", path.string()});
  CHECK(r.code == cli::kPass);
  CHECK(r.out.find("2.00") != std::string::npos);
  CHECK(r.out.find("1.00") != std::string::npos);

  const auto empty = temp_file("recouple_empty.csv", "");
  const auto e = invoke({"report", empty.string()});
  CHECK(e.code == cli::kUsageError);
  CHECK(e.err.find("line 1") != std::string::npos);

  const auto bad = temp_file("recouple_bad.csv", std::string(kBenchHeader) +
                                                     "\nnode,100,8,2,4,5,0.1,10,10,1\nnode,oops\n");
  const auto b = invoke({"report", bad.string()});
  CHECK(b.code == cli::kUsageError);
  CHECK(b.err.find("line 3") != std::string::npos);
  for (const auto& p : {path, empty, bad}) std::filesystem::remove(p);
}

TEST_CASE("usage errors") {
  CHECK(invoke({}).code == cli::kUsageError);
  CHECK(invoke({"frobnicate"}).code == cli::kUsageError);
  CHECK(invoke({"verify", "--suite", "nope"}).code == cli::kUsageError);
  CHECK(invoke({"bench", "--repeats", "2"}).code == cli::kUsageError);
  CHECK(invoke({"bench", "--lmax", "3..1"}).code == cli::kUsageError);
  CHECK(invoke({"report"}).code == cli::kUsageError);
  CHECK(invoke({"report", "/nonexistent/file.csv"}).code == cli::kUsageError);
}

TEST_CASE("CSV round trip") {
  BenchRecord ok{"node", 100, "8", 2, 4, 5, 0.0125, 123, 456, 9, std::nullopt};
  BenchRecord failed{"edge", 5000, "dense", 6, 8, 5, 0, 0, 0, 9, "out of memory"};
  const auto rows = parse(std::string(kBenchHeader) + "\n" + to_csv(ok) + "\n" +
                                    to_csv(failed) + "\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].tp_count == 123);
  CHECK(rows[0].median_s == doctest::Approx(0.0125));
  CHECK(rows[1].error.has_value());
}
