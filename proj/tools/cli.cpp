#include "cli.hpp"

#include <cstdlib>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "recouple/angular.hpp"

namespace recouple::cli {

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) items.push_back(item);
  return items;
}

long positive(const std::string& s, const char* what) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || v < 1) throw CLI::ValidationError(what, "expected a positive integer, got '" + s + "'");
  return v;
}

// "1..6" or "1,2,3".
std::vector<int> degree_list(const std::string& text) {
  std::vector<int> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const long lo = std::stol(text.substr(0, dots)), hi = std::stol(text.substr(dots + 2));
    if (lo < 0 || hi < lo) throw CLI::ValidationError("--lmax", "bad range '" + text + "'");
    for (long l = lo; l <= hi; ++l) out.push_back(static_cast<int>(l));
    return out;
  }
  for (const auto& item : split_list(text)) {
    std::size_t used = 0;
    const int l = std::stoi(item, &used);
    if (used != item.size() || l < 0) throw CLI::ValidationError("--lmax", "bad degree '" + item + "'");
    out.push_back(l);
  }
  return out;
}

void warm_from_environment() {
  if (const char* warm = std::getenv("RECOUPLE_WARM_J")) {
    const int j = std::atoi(warm);
    if (j > 0) {
      default_cache().warm_up(j);
      default_cache().freeze();
    }
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equivariant convolution checks and benchmarks", "recouple"};
  app.require_subcommand(1);

  VerifyOptions verify;
  auto* v = app.add_subcommand("verify", "Run the property suites and print a pass/fail table");
  std::vector<std::string> suites = suite_names();
  suites.insert(suites.begin(), "all");
  v->add_option("--suite", verify.suite, "Suite to run")->check(CLI::IsMember(suites));
  v->add_option("--n", verify.n, "Number of nodes")->check(CLI::PositiveNumber);
  v->add_option("--k", verify.k, "Neighbor count or 'dense'");
  v->add_option("--lmax", verify.lmax, "Degree cutoff")->check(CLI::Range(0, 6));
  v->add_option("--seed", verify.seed, "Random seed");
  v->add_flag("--corrupt-6j", verify.corrupt_6j, "Scale every 6j symbol (negative control)")
      ->group("");

  BenchOptions bench;
  std::string n_list = "250,500,1000", lmax_list = "3", k_list = "32";
  auto* b = app.add_subcommand("bench", "Time edge and node convolutions, CSV on stdout");
  b->add_option("--mode", bench.mode, "edge, node or both")
      ->check(CLI::IsMember({"edge", "node", "both"}));
  b->add_option("--n", n_list, "Comma-separated node counts");
  b->add_option("--lmax", lmax_list, "Degree cutoffs, list or range such as 1..6");
  b->add_option("--k", k_list, "Comma-separated neighbor counts, or 'dense'");
  b->add_option("--channels", bench.channels, "Channels per degree")->check(CLI::PositiveNumber);
  b->add_option("--repeats", bench.repeats, "Timed repeats (at least 5)")->check(CLI::Range(5, 1000));
  b->add_option("--seed", bench.seed, "Random seed");
  b->add_option("--threads", bench.threads, "Worker threads")->check(CLI::Range(1, 256));

  std::string csv_path;
  auto* r = app.add_subcommand("report", "Fit log-log slopes and speedups from a bench CSV");
  r->add_option("csv", csv_path, "Bench CSV file, or - for stdin")->required();

  try {
    app.parse(argc, argv);
    if (*v && verify.k != "dense") positive(verify.k, "--k");
    if (*b) {
      bench.n.clear();
      for (const auto& item : split_list(n_list)) bench.n.push_back(positive(item, "--n"));
      bench.lmax = degree_list(lmax_list);
      for (const int l : bench.lmax)
        if (l > 6) throw CLI::ValidationError("--lmax", "degrees above 6 are not supported");
      bench.k = split_list(k_list);
      for (const auto& k : bench.k)
        if (k != "dense") positive(k, "--k");
      if (bench.n.empty() || bench.lmax.empty() || bench.k.empty())
        throw CLI::ValidationError("bench", "empty list");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    warm_from_environment();
    if (*v) return cmd_verify(verify, out);
    if (*b) return cmd_bench(bench, out, err);
    return cmd_report(csv_path, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kPropertyFailure;
  }
}

}  // namespace recouple::cli
