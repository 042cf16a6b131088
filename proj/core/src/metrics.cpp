#include "qvle/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "qvle/errors.hpp"

namespace qvle::metrics {

namespace {

const std::set<std::string>* relevant_for(const Qrels& qrels, const std::string& qid) {
  auto it = qrels.find(qid);
  if (it == qrels.end() || it->second.empty()) return nullptr;
  return &it->second;
}

}  // namespace

double mrr_at_k(const RetrievalRun& run, const Qrels& qrels, std::size_t k) {
  if (run.empty()) throw EmptyBatchError();
  double total = 0.0;
  for (const auto& qr : run) {
    const auto* rel = relevant_for(qrels, qr.query_id);
    if (!rel) continue;
    const std::size_t lim = std::min(k, qr.hits.size());
    for (std::size_t r = 0; r < lim; ++r) {
      if (rel->count(qr.hits[r].doc_id)) {
        total += 1.0 / static_cast<double>(r + 1);
        break;
      }
    }
  }
  return total / static_cast<double>(run.size());
}

double recall_at_k(const RetrievalRun& run, const Qrels& qrels, std::size_t k) {
  if (run.empty()) throw EmptyBatchError();
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& qr : run) {
    const auto* rel = relevant_for(qrels, qr.query_id);
    if (!rel) continue;
    ++counted;
    const std::size_t lim = std::min(k, qr.hits.size());
    std::size_t found = 0;
    for (std::size_t r = 0; r < lim; ++r)
      if (rel->count(qr.hits[r].doc_id)) ++found;
    total += static_cast<double>(found) / static_cast<double>(rel->size());
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

double ndcg_at_k(const RetrievalRun& run, const Qrels& qrels, std::size_t k) {
  if (run.empty()) throw EmptyBatchError();
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& qr : run) {
    const auto* rel = relevant_for(qrels, qr.query_id);
    if (!rel) continue;
    ++counted;
    const std::size_t lim = std::min(k, qr.hits.size());
    double dcg = 0.0;
    for (std::size_t r = 0; r < lim; ++r)
      if (rel->count(qr.hits[r].doc_id)) dcg += 1.0 / std::log2(static_cast<double>(r + 2));
    double idcg = 0.0;
    const std::size_t ideal = std::min(k, rel->size());
    for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r + 2));
    total += dcg / idcg;
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

std::string run_to_json(const RetrievalRun& run) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& qr : run) {
    nlohmann::json hits = nlohmann::json::array();
    for (const auto& h : qr.hits) hits.push_back({{"doc", h.doc_id}, {"score", h.score}});
    arr.push_back({{"query", qr.query_id}, {"hits", std::move(hits)}});
  }
  return arr.dump(2) + "\n";
}

RetrievalRun run_from_json(const std::string& json_text) {
  RetrievalRun run;
  try {
    const auto arr = nlohmann::json::parse(json_text);
    for (const auto& entry : arr) {
      QueryResult qr;
      qr.query_id = entry.at("query").get<std::string>();
      for (const auto& h : entry.at("hits"))
        qr.hits.push_back({h.at("doc").get<std::string>(), h.at("score").get<double>()});
      run.push_back(std::move(qr));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("run file: ") + e.what());
  }
  return run;
}

Qrels qrels_from_jsonl(const std::string& jsonl_text) {
  Qrels qrels;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < jsonl_text.size()) {
    std::size_t end = jsonl_text.find('\n', start);
    if (end == std::string::npos) end = jsonl_text.size();
    const std::string line = jsonl_text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto& set = qrels[j.at("query").get<std::string>()];
      for (const auto& d : j.at("pos")) set.insert(d.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, std::string("qrels: ") + e.what());
    }
  }
  return qrels;
}

}  // namespace qvle::metrics
