#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qvle/embedding_matrix.hpp"
#include "qvle/index.hpp"
#include "qvle/metrics.hpp"

namespace qvle::bench {

struct LatencyStats {
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;
};

/// One (dim, precision) grid point.  storage_bytes is payload only
/// (count × bytes_per_vector), so e.g. halving dim exactly halves it at F32;
/// the on-disk figure additionally carries the index header and id table.
struct TradeoffCell {
  std::size_t dim = 0;
  index::Precision precision = index::Precision::F32;
  double mrr = 0.0;
  double recall = 0.0;
  double ndcg = 0.0;
  std::size_t storage_bytes = 0;
  LatencyStats latency;
};

struct TradeoffReport {
  std::size_t top_k = 0;
  std::vector<TradeoffCell> cells;

  std::string to_json() const;
  std::string human_summary() const;
};

struct BenchConfig {
  std::vector<std::size_t> dims;                // ascending, each ≤ full D
  std::vector<index::Precision> precisions;
  std::size_t top_k = 10;
  std::size_t threads = 1;                      // searches per cell run concurrently
};

/// Builds one index per (dim, precision), runs every query through it, and
/// records metrics, payload storage, and per-query search latency.
/// Everything except the latency fields is deterministic.
TradeoffReport bench_grid(const EmbeddingMatrix& corpus, const EmbeddingMatrix& queries,
                          const metrics::Qrels& qrels, const BenchConfig& cfg);

}  // namespace qvle::bench
