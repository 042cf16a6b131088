#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "qvle/index.hpp"

namespace qvle::metrics {

/// Ranked hits for one query, best first.
struct QueryResult {
  std::string query_id;
  std::vector<index::Hit> hits;
};

using RetrievalRun = std::vector<QueryResult>;

/// query id -> set of relevant doc ids (binary relevance).
using Qrels = std::map<std::string, std::set<std::string>>;

/// Mean over queries of 1/rank of the first relevant hit within the top k,
/// 0 for queries with no relevant hit there.  Queries absent from qrels or
/// with empty qrels entries count as 0.
double mrr_at_k(const RetrievalRun& run, const Qrels& qrels, std::size_t k);

/// Mean over queries of |relevant ∩ top-k| / |relevant|.  Queries with no
/// relevant docs are skipped; if none remain the result is 0.
double recall_at_k(const RetrievalRun& run, const Qrels& qrels, std::size_t k);

/// Binary-gain nDCG with log2(rank+1) discount, ideal = all relevant docs
/// stacked at the top.  Queries with no relevant docs are skipped.
double ndcg_at_k(const RetrievalRun& run, const Qrels& qrels, std::size_t k);

/// Run file: JSON array of {"query": id, "hits": [{"doc": id, "score": f64}]}.
std::string run_to_json(const RetrievalRun& run);
RetrievalRun run_from_json(const std::string& json_text);

/// Qrels file: JSONL of {"query": id, "pos": [id...]}; extra fields (for
/// instance "neg" or a leading "kind") are ignored.
Qrels qrels_from_jsonl(const std::string& jsonl_text);

}  // namespace qvle::metrics
