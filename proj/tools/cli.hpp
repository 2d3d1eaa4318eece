#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace recouple::cli {

/// Exit codes shared by all subcommands.
enum ExitCode { kPass = 0, kPropertyFailure = 1, kUsageError = 2 };

struct VerifyOptions {
  std::string suite = "all";
  long n = 32;
  std::string k = "8";  // neighbor count or "dense"
  int lmax = 3;
  std::uint64_t seed = 7;
  bool corrupt_6j = false;
};

struct SuiteResult {
  std::string name;
  bool passed = true;
  double worst = 0.0;          // worst error seen
  std::string counterexample;  // inputs of the first failure
};

const std::vector<std::string>& suite_names();
SuiteResult run_suite(const std::string& name, const VerifyOptions& options);
int cmd_verify(const VerifyOptions& options, std::ostream& out);

struct BenchOptions {
  std::string mode = "both";
  std::vector<long> n{250, 500, 1000};
  std::vector<int> lmax{3};
  std::vector<std::string> k{"32"};
  long channels = 8;
  int repeats = 5;
  int warmups = 2;
  std::uint64_t seed = 1;
  int threads = 1;
};

int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err);
int cmd_report(const std::string& path, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace recouple::cli
