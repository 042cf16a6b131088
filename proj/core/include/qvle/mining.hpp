#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qvle/dataset.hpp"
#include "qvle/embedding_matrix.hpp"

namespace qvle::mining {

/// Recall depth, positive threshold t+ and hard-negative safety margin d-.
struct MiningConfig {
  std::size_t k = 100;
  double t_plus = 0.4;
  double delta_minus = 0.1;
  std::size_t threads = 1;
  /// Used for instances without a precomputed embedding.
  std::function<Vec(const Instance&)> embedder;
};

struct Candidate {
  std::string doc_id;
  double score = 0.0;
};

/// Per query: top-K candidates ordered by (score desc, id asc).
using CandidateList = std::vector<std::vector<Candidate>>;

/// Exact brute-force cosine top-K for every query row.
CandidateList recall_topk(const EmbeddingMatrix& queries, const EmbeddingMatrix& corpus,
                          std::size_t k, std::size_t threads = 1);

struct KeptQuery {
  std::string query_id;
  std::size_t query_index = 0;
  std::vector<std::string> refined_positives;  // labeled positives in top-K with score > t+
  double s_bar_plus = 0.0;                     // mean score of the refined positives
};

struct DiscardedQuery {
  std::string query_id;
  std::string reason;  // exactly one reason code
};

struct RefineResult {
  std::vector<KeptQuery> kept;
  std::vector<DiscardedQuery> discarded;
};

/// Keeps a query iff some labeled positive appears in its top-K with score
/// strictly above t+.  Positives outside the top-K do not count.
RefineResult refine_positives(const CandidateList& candidates,
                              const std::vector<std::string>& query_ids,
                              const std::vector<RelEntry>& labels, double t_plus);

/// For each kept query, selects every non-positive top-K candidate whose
/// score is strictly below s_bar_plus + delta_minus.  Labeled positives are
/// never selected.
std::vector<std::vector<std::string>> select_hard_negatives(
    const CandidateList& candidates, const std::vector<KeptQuery>& kept,
    const std::vector<RelEntry>& labels, double delta_minus);

struct MinedDataset {
  std::vector<RelEntry> refined;        // kept queries only, input order
  std::vector<KeptQuery> kept;          // audit detail incl. s_bar_plus
  std::vector<DiscardedQuery> discarded;
};

/// recall_topk -> refine_positives -> select_hard_negatives, deterministic
/// for fixed inputs.  Throws EmbedderFailureError when an instance has no
/// embedding and no embedder is configured.
MinedDataset mine(const DatasetQuadruple& ds, const MiningConfig& cfg);

}  // namespace qvle::mining
