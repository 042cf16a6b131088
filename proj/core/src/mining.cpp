#include "qvle/mining.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "qvle/errors.hpp"
#include "qvle/parallel.hpp"
#include "qvle/vec.hpp"

namespace qvle::mining {

CandidateList recall_topk(const EmbeddingMatrix& queries, const EmbeddingMatrix& corpus,
                          std::size_t k, std::size_t threads) {
  if (queries.dim != corpus.dim) throw DimMismatchError(queries.dim, corpus.dim);
  CandidateList out(queries.rows);
  auto better = [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  };
  parallel_for(queries.rows, threads, [&](std::size_t qi) {
    std::vector<Candidate> all;
    all.reserve(corpus.rows);
    for (std::size_t di = 0; di < corpus.rows; ++di)
      all.push_back({corpus.ids[di], cosine_similarity(queries.row(qi), corpus.row(di)).value});
    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                      better);
    all.resize(keep);
    out[qi] = std::move(all);
  });
  return out;
}

RefineResult refine_positives(const CandidateList& candidates,
                              const std::vector<std::string>& query_ids,
                              const std::vector<RelEntry>& labels, double t_plus) {
  std::unordered_map<std::string, const RelEntry*> rel_by_query;
  for (const auto& r : labels) rel_by_query[r.query] = &r;

  RefineResult out;
  for (std::size_t qi = 0; qi < candidates.size(); ++qi) {
    const std::string& qid = query_ids[qi];
    auto it = rel_by_query.find(qid);
    if (it == rel_by_query.end() || it->second->positives.empty()) {
      out.discarded.push_back({qid, "no_labeled_positives"});
      continue;
    }
    std::unordered_set<std::string> pos(it->second->positives.begin(),
                                        it->second->positives.end());
    bool any_in_topk = false;
    std::vector<std::string> refined;
    double sum = 0.0;
    for (const auto& cand : candidates[qi]) {
      if (!pos.count(cand.doc_id)) continue;
      any_in_topk = true;
      if (cand.score > t_plus) {
        refined.push_back(cand.doc_id);
        sum += cand.score;
      }
    }
    if (refined.empty()) {
      out.discarded.push_back(
          {qid, any_in_topk ? "no_positive_above_threshold" : "no_positive_in_topk"});
      continue;
    }
    const double s_bar = sum / static_cast<double>(refined.size());
    out.kept.push_back({qid, qi, std::move(refined), s_bar});
  }
  return out;
}

std::vector<std::vector<std::string>> select_hard_negatives(
    const CandidateList& candidates, const std::vector<KeptQuery>& kept,
    const std::vector<RelEntry>& labels, double delta_minus) {
  std::unordered_map<std::string, const RelEntry*> rel_by_query;
  for (const auto& r : labels) rel_by_query[r.query] = &r;

  std::vector<std::vector<std::string>> out(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const KeptQuery& kq = kept[i];
    const RelEntry* rel = rel_by_query.at(kq.query_id);
    std::unordered_set<std::string> pos(rel->positives.begin(), rel->positives.end());
    const double cutoff = kq.s_bar_plus + delta_minus;
    for (const auto& cand : candidates[kq.query_index]) {
      if (pos.count(cand.doc_id)) continue;
      if (cand.score < cutoff) out[i].push_back(cand.doc_id);
    }
  }
  return out;
}

namespace {

Vec embed_instance(const Instance& inst, const MiningConfig& cfg) {
  if (inst.embedding) return *inst.embedding;
  if (!cfg.embedder) throw EmbedderFailureError(inst.id);
  Vec v = cfg.embedder(inst);
  if (v.empty() || !all_finite(v)) throw EmbedderFailureError(inst.id);
  return v;
}

}  // namespace

MinedDataset mine(const DatasetQuadruple& ds, const MiningConfig& cfg) {
  EmbeddingMatrix queries, corpus;
  for (const auto& q : ds.queries) queries.push_row(q.id, embed_instance(q, cfg));
  for (const auto& d : ds.corpus) corpus.push_row(d.id, embed_instance(d, cfg));

  const CandidateList candidates = recall_topk(queries, corpus, cfg.k, cfg.threads);
  RefineResult refined = refine_positives(candidates, queries.ids, ds.relevance, cfg.t_plus);
  const auto negatives =
      select_hard_negatives(candidates, refined.kept, ds.relevance, cfg.delta_minus);

  MinedDataset out;
  out.kept = refined.kept;
  out.discarded = std::move(refined.discarded);
  for (std::size_t i = 0; i < out.kept.size(); ++i) {
    RelEntry rel;
    rel.query = out.kept[i].query_id;
    rel.positives = out.kept[i].refined_positives;
    rel.negatives = negatives[i];
    out.refined.push_back(std::move(rel));
  }
  return out;
}

}  // namespace qvle::mining
