#include "qvle/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "qvle/errors.hpp"
#include "qvle/io_util.hpp"
#include "qvle/vec.hpp"

namespace qvle::rerank {

std::string render_instance(const Instance& instance) {
  if (instance.parts.empty()) throw EmptyInstanceError();
  std::string out;
  for (std::size_t i = 0; i < instance.parts.size(); ++i) {
    if (i) out += ' ';
    const auto& p = instance.parts[i];
    switch (p.kind) {
      case PartKind::Text: out += p.value; break;
      case PartKind::ImageRef: out += "<image:" + p.value + ">"; break;
      case PartKind::VideoRef: out += "<video:" + p.value + ">"; break;
    }
  }
  return out;
}

std::string render_embedding_template(const std::string& instruction, const Instance& instance) {
  const std::string& instr = instruction.empty() ? kDefaultEmbedInstruction : instruction;
  return "<|im_start|>system\n" + instr + "\n<|im_end|>\n<|im_start|>user\n" +
         render_instance(instance) + "\n<|im_end|>\n<|im_start|>assistant\n<|endoftext|>";
}

std::string render_rerank_template(const std::string& instruction, const Instance& query,
                                   const Instance& doc) {
  // The trailing spaces after the Instruct and Query fields are part of the
  // prompt contract and must survive byte-for-byte.
  return std::string("<|im_start|>system\n") +
         "Judge whether the Document meets the requirements based on the Query and the "
         "Instruct provided. Note that the answer can only be \"yes\" or \"no\".\n" +
         "<|im_end|>\n<|im_start|>user\n" +
         "<Instruct>: " + instruction + " \n" +
         "<Query>: " + render_instance(query) + " \n" +
         "<Document>: " + render_instance(doc) + "\n" +
         "<|im_end|>\n<|im_start|>assistant\n";
}

double rerank_score(double logit_yes, double logit_no) {
  if (!std::isfinite(logit_yes) || !std::isfinite(logit_no))
    throw NonFiniteError("rerank logits");
  const double d = logit_yes - logit_no;
  return 1.0 / (1.0 + std::exp(-d));
}

double rerank_loss(Label label, double logit_yes, double logit_no) {
  if (!std::isfinite(logit_yes) || !std::isfinite(logit_no))
    throw NonFiniteError("rerank logits");
  const double m = std::max(logit_yes, logit_no);
  const double lse = m + std::log(std::exp(logit_yes - m) + std::exp(logit_no - m));
  return lse - (label == Label::Yes ? logit_yes : logit_no);
}

namespace {

Scorer file_scorer_from_lines(std::istream& in, const std::string& origin) {
  auto table = std::make_shared<std::map<std::pair<std::string, std::string>, std::pair<double, double>>>();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      (*table)[{j.at("query").get<std::string>(), j.at("doc").get<std::string>()}] = {
          j.at("logit_yes").get<double>(), j.at("logit_no").get<double>()};
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, origin + ": " + e.what());
    }
  }
  return [table](const std::string&, const Instance& q, const Instance& d) {
    auto it = table->find({q.id, d.id});
    if (it == table->end()) throw DanglingIdError(q.id + "/" + d.id);
    return it->second;
  };
}

}  // namespace

Scorer make_file_scorer(const std::string& jsonl_path) {
  std::istringstream in(read_file(jsonl_path));
  return file_scorer_from_lines(in, jsonl_path);
}

Scorer make_file_scorer_from_string(const std::string& jsonl_text) {
  std::istringstream in(jsonl_text);
  return file_scorer_from_lines(in, "<inline>");
}

Scorer make_mock_cosine_scorer(double temperature) {
  return [temperature](const std::string&, const Instance& q, const Instance& d) {
    if (!q.embedding || !d.embedding) throw EmbedderFailureError(q.embedding ? d.id : q.id);
    return std::pair<double, double>{
        cosine_similarity(*q.embedding, *d.embedding).value / temperature, 0.0};
  };
}

namespace {

std::vector<index::Hit> resort(std::vector<RerankCandidate> cands) {
  // stable sort keeps retrieval order on score ties
  std::stable_sort(cands.begin(), cands.end(),
                   [](const RerankCandidate& a, const RerankCandidate& b) {
                     return a.score > b.score;
                   });
  std::vector<index::Hit> hits;
  hits.reserve(cands.size());
  for (auto& c : cands) hits.push_back({std::move(c.doc_id), c.score});
  return hits;
}

}  // namespace

metrics::RetrievalRun rerank_pipeline(const index::QuantizedIndex& index, const Scorer& scorer,
                                      const std::string& instruction,
                                      const std::vector<Instance>& queries,
                                      const std::map<std::string, Instance>& corpus_by_id,
                                      std::size_t top_n) {
  metrics::RetrievalRun out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    if (!q.embedding) throw EmbedderFailureError(q.id);
    const auto retrieved = index.search(*q.embedding, top_n);
    std::vector<RerankCandidate> cands;
    cands.reserve(retrieved.size());
    for (const auto& hit : retrieved) {
      auto it = corpus_by_id.find(hit.doc_id);
      if (it == corpus_by_id.end()) throw DanglingIdError(hit.doc_id);
      auto [ly, ln] = scorer(instruction, q, it->second);
      cands.push_back({q.id, hit.doc_id, ly, ln, rerank_score(ly, ln)});
    }
    out.push_back({q.id, resort(std::move(cands))});
  }
  return out;
}

metrics::RetrievalRun rerank_run(const metrics::RetrievalRun& run, const Scorer& scorer,
                                 const std::string& instruction, std::size_t top_n) {
  metrics::RetrievalRun out;
  out.reserve(run.size());
  for (const auto& qr : run) {
    Instance q{qr.query_id, {{PartKind::Text, qr.query_id}}, std::nullopt};
    std::vector<RerankCandidate> cands;
    const std::size_t lim = std::min(top_n, qr.hits.size());
    for (std::size_t r = 0; r < lim; ++r) {
      Instance d{qr.hits[r].doc_id, {{PartKind::Text, qr.hits[r].doc_id}}, std::nullopt};
      auto [ly, ln] = scorer(instruction, q, d);
      cands.push_back({qr.query_id, qr.hits[r].doc_id, ly, ln, rerank_score(ly, ln)});
    }
    out.push_back({qr.query_id, resort(std::move(cands))});
  }
  return out;
}

}  // namespace qvle::rerank
