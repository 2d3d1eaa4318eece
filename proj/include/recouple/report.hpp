#pragma once

// Benchmark records, their CSV form, and the log-log scaling summary.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace recouple {

/// One timed configuration. `k` is a neighbor count or the literal "dense". Failed
/// configurations carry an error and print ERROR in place of the measurements.
struct BenchRecord {
  std::string mode;  // "edge" or "node"
  long n = 0;
  std::string k;
  int lmax = 0;
  long channels = 0;
  int repeats = 0;
  double median_s = 0.0;
  std::uint64_t tp_count = 0;
  std::uint64_t add_count = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
};

inline constexpr const char* kBenchHeader =
    "mode,n,k,lmax,channels,repeats,median_s,tp_count,add_count,seed";

std::string to_csv(const BenchRecord& record);

struct CsvParseError : std::runtime_error {
  CsvParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
  int line;
};

/// Parses a bench CSV (header required). ERROR rows are kept with `error` set.
std::vector<BenchRecord> parse_bench_csv(std::istream& in);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Least-squares fit of log(y) = slope * log(x) + intercept. Needs two distinct x values.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingSummary {
  struct Series {
    std::string mode, k;
    int lmax = 0;
    long channels = 0;
    SlopeFit fit;
  };
  struct Speedup {
    long n = 0;
    std::string k;
    int lmax = 0;
    long channels = 0;
    double edge_over_node = 0.0;
  };
  std::vector<Series> series;
  std::vector<Speedup> speedups;
};

/// Slope of time against N for every (mode, k, lmax, channels) series with at least two
/// sizes, and the edge/node time ratio wherever both modes were measured.
ScalingSummary summarize(const std::vector<BenchRecord>& records);
void print_summary(std::ostream& out, const ScalingSummary& summary);

}  // namespace recouple
