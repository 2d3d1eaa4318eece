#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <new>
#include <optional>
#include <stdexcept>

#include "cli.hpp"
#include "recouple/conv.hpp"
#include "recouple/graph.hpp"
#include "recouple/report.hpp"

namespace recouple::cli {

namespace {

using Clock = std::chrono::steady_clock;

struct Timed {
  double median_s = 0.0;
  ConvCounters counters;
  IrrepTensor<double> output;
};

// Warmups first; only the convolution call sits inside the timed region.
template <typename Run>
Timed time_runs(const BenchOptions& o, Run&& run) {
  Timed t;
  for (int w = 0; w < o.warmups; ++w) {
    auto r = run();
    t.counters = r.counters;
    t.output = std::move(r.features);
  }
  std::vector<double> seconds;
  for (int rep = 0; rep < o.repeats; ++rep) {
    const auto start = Clock::now();
    auto r = run();
    seconds.push_back(std::chrono::duration<double>(Clock::now() - start).count());
    t.counters = r.counters;
    if (o.warmups == 0 && rep == 0) t.output = std::move(r.features);
  }
  std::nth_element(seconds.begin(), seconds.begin() + seconds.size() / 2, seconds.end());
  t.median_s = seconds[seconds.size() / 2];
  return t;
}

}  // namespace

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<std::string> modes;
  if (o.mode == "both" || o.mode == "edge") modes.push_back("edge");
  if (o.mode == "both" || o.mode == "node") modes.push_back("node");

  out << kBenchHeader << '\n';
  for (const int lmax : o.lmax)
    for (const long n : o.n)
      for (const auto& k : o.k) {
        std::vector<BenchRecord> rows;
        for (const auto& mode : modes) {
          BenchRecord r;
          r.mode = mode;
          r.n = n;
          r.k = k;
          r.lmax = lmax;
          r.channels = o.channels;
          r.repeats = o.repeats;
          r.seed = o.seed;
          rows.push_back(r);
        }
        std::vector<IrrepTensor<double>> outputs(rows.size());
        try {
          const PointCloud cloud = random_cloud(n, o.seed);
          const NeighborGraph graph = k == "dense" ? dense(n) : knn(cloud, std::stol(k));
          CounterRng rng(o.seed, 1);
          const auto h =
              IrrepTensor<double>::random(n, IrrepsLayout::uniform(lmax, o.channels), rng);
          ConvConfig cfg;
          cfg.l_max = lmax;
          cfg.channels = o.channels;
          cfg.threads = o.threads;
          pair_constants(lmax);  // calibration stays outside the timed region
          for (std::size_t m = 0; m < rows.size(); ++m) {
            try {
              Timed t = rows[m].mode == "edge"
                            ? time_runs(o, [&] { return edge_conv(graph, cloud.positions, h, cfg); })
                            : time_runs(o, [&] { return node_conv(graph, cloud.positions, h, cfg); });
              rows[m].median_s = t.median_s;
              rows[m].tp_count = t.counters.tensor_products;
              rows[m].add_count = t.counters.scalar_adds;
              outputs[m] = std::move(t.output);
            } catch (const std::bad_alloc&) {
              rows[m].error = "out of memory";
            } catch (const std::length_error&) {
              rows[m].error = "out of memory";
            }
          }
          if (rows.size() == 2 && !rows[0].error && !rows[1].error) {
            const double diff = relative_difference(outputs[1], outputs[0]);
            if (!(diff < 1e-10)) {
              for (auto& r : rows) r.error = "edge and node outputs differ";
              err << "n=" << n << " k=" << k << " lmax=" << lmax
                  << ": edge and node outputs differ (relative " << diff << "), timing withheld\n";
            }
          }
        } catch (const std::bad_alloc&) {
          for (auto& r : rows) r.error = "out of memory";
        } catch (const std::length_error&) {
          for (auto& r : rows) r.error = "out of memory";
        }
        for (const auto& r : rows) {
          if (r.error && *r.error == "out of memory")
            err << "n=" << n << " k=" << k << " lmax=" << lmax << " " << r.mode
                << ": out of memory\n";
          out << to_csv(r) << '\n' << std::flush;
        }
      }
  return kPass;
}

int cmd_report(const std::string& path, std::ostream& out, std::ostream& err) {
  try {
    std::vector<BenchRecord> records;
    if (path == "-") {
      records = parse_bench_csv(std::cin);
    } else {
      std::ifstream in(path);
      if (!in) {
        err << "cannot open " << path << '\n';
        return kUsageError;
      }
      records = parse_bench_csv(in);
    }
    print_summary(out, summarize(records));
    return kPass;
  } catch (const CsvParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kUsageError;
  }
}

}  // namespace recouple::cli
