#include "qvle/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "qvle/errors.hpp"
#include "qvle/parallel.hpp"

namespace qvle::bench {

namespace {

LatencyStats summarize(std::vector<double> ms) {
  LatencyStats st;
  if (ms.empty()) return st;
  double sum = 0.0;
  for (double v : ms) sum += v;
  st.mean_ms = sum / static_cast<double>(ms.size());
  std::sort(ms.begin(), ms.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(ms.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, ms.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return ms[lo] + frac * (ms[hi] - ms[lo]);
  };
  st.p50_ms = quantile(0.5);
  st.p99_ms = quantile(0.99);
  return st;
}

}  // namespace

TradeoffReport bench_grid(const EmbeddingMatrix& corpus, const EmbeddingMatrix& queries,
                          const metrics::Qrels& qrels, const BenchConfig& cfg) {
  if (cfg.dims.empty() || cfg.precisions.empty()) throw BadDimsError("empty benchmark grid");
  if (!std::is_sorted(cfg.dims.begin(), cfg.dims.end()))
    throw BadDimsError("grid dims must be ascending");
  if (queries.dim != corpus.dim) throw DimMismatchError(queries.dim, corpus.dim);

  TradeoffReport report;
  report.top_k = cfg.top_k;
  for (std::size_t dim : cfg.dims) {
    for (index::Precision p : cfg.precisions) {
      const auto idx = index::QuantizedIndex::build(corpus, {dim, p});
      metrics::RetrievalRun run(queries.rows);
      std::vector<double> lat(queries.rows, 0.0);
      parallel_for(queries.rows, cfg.threads, [&](std::size_t qi) {
        const auto t0 = std::chrono::steady_clock::now();
        auto hits = idx.search(queries.row(qi), cfg.top_k);
        const auto t1 = std::chrono::steady_clock::now();
        lat[qi] = std::chrono::duration<double, std::milli>(t1 - t0).count();
        run[qi] = {queries.ids[qi], std::move(hits)};
      });
      TradeoffCell cell;
      cell.dim = dim;
      cell.precision = p;
      cell.mrr = metrics::mrr_at_k(run, qrels, cfg.top_k);
      cell.recall = metrics::recall_at_k(run, qrels, cfg.top_k);
      cell.ndcg = metrics::ndcg_at_k(run, qrels, cfg.top_k);
      cell.storage_bytes = idx.payload_bytes();
      cell.latency = summarize(std::move(lat));
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

std::string TradeoffReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cells) {
    arr.push_back({{"dim", c.dim},
                   {"precision", index::precision_to_string(c.precision)},
                   {"mrr", c.mrr},
                   {"recall", c.recall},
                   {"ndcg", c.ndcg},
                   {"storage_bytes", c.storage_bytes},
                   {"latency_ms",
                    {{"mean", c.latency.mean_ms},
                     {"p50", c.latency.p50_ms},
                     {"p99", c.latency.p99_ms}}}});
  }
  return arr.dump(2) + "\n";
}

std::string TradeoffReport::human_summary() const {
  std::ostringstream os;
  os << "dim   precision  MRR@" << top_k << "   recall  nDCG    storage(B)  mean/p50/p99(ms)\n";
  for (const auto& c : cells) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-6zu%-11s%-8.4f%-8.4f%-8.4f%-12zu%.3f/%.3f/%.3f\n",
                  c.dim, index::precision_to_string(c.precision).c_str(), c.mrr, c.recall,
                  c.ndcg, c.storage_bytes, c.latency.mean_ms, c.latency.p50_ms,
                  c.latency.p99_ms);
    os << line;
  }
  return os.str();
}

}  // namespace qvle::bench
