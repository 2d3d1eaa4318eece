#include "recouple/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace recouple {

std::string to_csv(const BenchRecord& r) {
  std::ostringstream out;
  out << r.mode << ',' << r.n << ',' << r.k << ',' << r.lmax << ',' << r.channels << ','
      << r.repeats << ',';
  if (r.error) {
    out << "ERROR,,";
  } else {
    char t[32];
    std::snprintf(t, sizeof t, "%.6e", r.median_s);
    out << t << ',' << r.tp_count << ',' << r.add_count;
  }
  out << ',' << r.seed;
  return out.str();
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T number(const std::string& s, int line, const char* column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw CsvParseError(line, std::string("bad ") + column + " '" + s + "'");
  return value;
}

double real_number(const std::string& s, int line, const char* column) {
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(value))
    throw CsvParseError(line, std::string("bad ") + column + " '" + s + "'");
  return value;
}

}  // namespace

std::vector<BenchRecord> parse_bench_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  if (!next_line()) throw CsvParseError(1, "empty input, expected header");
  if (line != kBenchHeader) throw CsvParseError(line_no, "unexpected header '" + line + "'");

  std::vector<BenchRecord> records;
  while (next_line()) {
    const auto f = split(line);
    if (f.size() != 10)
      throw CsvParseError(line_no, "expected 10 fields, found " + std::to_string(f.size()));
    BenchRecord r;
    r.mode = f[0];
    if (r.mode != "edge" && r.mode != "node") throw CsvParseError(line_no, "bad mode '" + f[0] + "'");
    r.n = number<long>(f[1], line_no, "n");
    r.k = f[2];
    if (r.k != "dense") number<long>(r.k, line_no, "k");
    r.lmax = number<int>(f[3], line_no, "lmax");
    r.channels = number<long>(f[4], line_no, "channels");
    r.repeats = number<int>(f[5], line_no, "repeats");
    if (f[6] == "ERROR") {
      r.error = "reported as ERROR";
    } else {
      r.median_s = real_number(f[6], line_no, "median_s");
      r.tp_count = number<std::uint64_t>(f[7], line_no, "tp_count");
      r.add_count = number<std::uint64_t>(f[8], line_no, "add_count");
    }
    r.seed = number<std::uint64_t>(f[9], line_no, "seed");
    records.push_back(std::move(r));
  }
  return records;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog: size mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw std::invalid_argument("fit_loglog: nonpositive value");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(x.size());
  const double denom = n * sxx - sx * sx;
  if (x.size() < 2 || !(std::abs(denom) > 1e-12))
    throw std::invalid_argument("fit_loglog: need at least two distinct sizes");
  SlopeFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.points = x.size();
  return fit;
}

ScalingSummary summarize(const std::vector<BenchRecord>& records) {
  using SeriesKey = std::tuple<std::string, std::string, int, long>;
  std::map<SeriesKey, std::map<long, double>> series;
  for (const auto& r : records)
    if (!r.error) series[{r.mode, r.k, r.lmax, r.channels}][r.n] = r.median_s;

  ScalingSummary summary;
  for (const auto& [key, points] : series) {
    if (points.size() < 2) continue;
    std::vector<double> x, y;
    for (const auto& [n, t] : points) {
      x.push_back(static_cast<double>(n));
      y.push_back(t);
    }
    const auto& [mode, k, lmax, channels] = key;
    summary.series.push_back({mode, k, lmax, channels, fit_loglog(x, y)});
  }
  for (const auto& [key, points] : series) {
    const auto& [mode, k, lmax, channels] = key;
    if (mode != "edge") continue;
    const auto node = series.find({"node", k, lmax, channels});
    if (node == series.end()) continue;
    for (const auto& [n, t] : points)
      if (const auto it = node->second.find(n); it != node->second.end() && it->second > 0)
        summary.speedups.push_back({n, k, lmax, channels, t / it->second});
  }
  return summary;
}

void print_summary(std::ostream& out, const ScalingSummary& summary) {
  char line[160];
  out << "log-log slope of median time vs N\n";
  for (const auto& s : summary.series) {
    std::snprintf(line, sizeof line, "  %-4s k=%-6s lmax=%d C=%ld  slope %.3f (%zu sizes)\n",
                  s.mode.c_str(), s.k.c_str(), s.lmax, s.channels, s.fit.slope, s.fit.points);
    out << line;
  }
  if (summary.series.empty()) out << "  (no series with two or more sizes)\n";
  out << "edge / node time ratio\n";
  for (const auto& s : summary.speedups) {
    std::snprintf(line, sizeof line, "  n=%-6ld k=%-6s lmax=%d C=%ld  %.2fx\n", s.n, s.k.c_str(),
                  s.lmax, s.channels, s.edge_over_node);
    out << line;
  }
  if (summary.speedups.empty()) out << "  (no configuration measured in both modes)\n";
}

}  // namespace recouple
