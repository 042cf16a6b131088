#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qvle/dataset.hpp"
#include "qvle/index.hpp"
#include "qvle/metrics.hpp"

namespace qvle::rerank {

inline constexpr const char* kDefaultEmbedInstruction = "Represent the user's input.";

/// Serializes instance parts in order, joined by single spaces; media parts
/// render as <image:path> / <video:path> placeholder tags.
std::string render_instance(const Instance& instance);

/// Chat-format embedding prompt: system turn = instruction, user turn =
/// instance, assistant turn closed by the <|endoftext|> pad token.
/// Empty instruction falls back to kDefaultEmbedInstruction.
std::string render_embedding_template(const std::string& instruction, const Instance& instance);

/// Chat-format yes/no judging prompt over (instruction, query, document),
/// ending with an open assistant turn.
std::string render_rerank_template(const std::string& instruction, const Instance& query,
                                   const Instance& doc);

/// sigmoid(logit_yes - logit_no).  Throws NonFiniteError.
double rerank_score(double logit_yes, double logit_no);

enum class Label { Yes, No };

/// Two-class softmax negative log-likelihood of the label token.
double rerank_loss(Label label, double logit_yes, double logit_no);

struct RerankCandidate {
  std::string query_id;
  std::string doc_id;
  double logit_yes = 0.0;
  double logit_no = 0.0;
  double score = 0.0;  // sigmoid(logit_yes - logit_no)
};

/// (instruction, query, doc) -> (logit_yes, logit_no); must be deterministic.
using Scorer =
    std::function<std::pair<double, double>(const std::string&, const Instance&, const Instance&)>;

/// Looks up precomputed logits keyed by (query id, doc id).
/// Throws DanglingIdError for pairs absent from the file.
Scorer make_file_scorer(const std::string& jsonl_path);
Scorer make_file_scorer_from_string(const std::string& jsonl_text);

/// logit_yes = cos(query, doc) / temperature, logit_no = 0; requires both
/// instances to carry embeddings.  For pipeline tests and demos.
Scorer make_mock_cosine_scorer(double temperature);

/// Retrieve top_n per query from the index, score every candidate, and
/// re-sort by score descending; ties keep retrieval order.
metrics::RetrievalRun rerank_pipeline(const index::QuantizedIndex& index, const Scorer& scorer,
                                      const std::string& instruction,
                                      const std::vector<Instance>& queries,
                                      const std::map<std::string, Instance>& corpus_by_id,
                                      std::size_t top_n);

/// Same re-sort applied to an existing retrieval run (id-only variant used
/// when candidates were retrieved elsewhere).
metrics::RetrievalRun rerank_run(const metrics::RetrievalRun& run, const Scorer& scorer,
                                 const std::string& instruction, std::size_t top_n);

}  // namespace qvle::rerank
