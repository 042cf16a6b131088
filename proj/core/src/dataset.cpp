#include "qvle/dataset.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "qvle/errors.hpp"
#include "qvle/io_util.hpp"

namespace qvle {

using nlohmann::json;

namespace {

Part parse_part(const json& j, std::size_t line) {
  if (!j.is_object() || j.size() != 1)
    throw ParseError(line, "part must be an object with exactly one key");
  if (j.contains("text")) return {PartKind::Text, j.at("text").get<std::string>()};
  if (j.contains("image")) return {PartKind::ImageRef, j.at("image").get<std::string>()};
  if (j.contains("video")) return {PartKind::VideoRef, j.at("video").get<std::string>()};
  throw ParseError(line, "part key must be one of text|image|video");
}

json part_to_json(const Part& p) {
  switch (p.kind) {
    case PartKind::Text: return json{{"text", p.value}};
    case PartKind::ImageRef: return json{{"image", p.value}};
    case PartKind::VideoRef: return json{{"video", p.value}};
  }
  return {};
}

Instance parse_instance(const json& j, std::size_t line) {
  Instance inst;
  inst.id = j.at("id").get<std::string>();
  if (!j.contains("parts") || !j.at("parts").is_array() || j.at("parts").empty())
    throw ParseError(line, "instance needs a non-empty parts array");
  for (const auto& pj : j.at("parts")) inst.parts.push_back(parse_part(pj, line));
  if (j.contains("embedding")) inst.embedding = j.at("embedding").get<Vec>();
  return inst;
}

}  // namespace

const Instance* DatasetQuadruple::find_query(const std::string& id) const {
  for (const auto& q : queries)
    if (q.id == id) return &q;
  return nullptr;
}

const Instance* DatasetQuadruple::find_doc(const std::string& id) const {
  for (const auto& d : corpus)
    if (d.id == id) return &d;
  return nullptr;
}

DatasetQuadruple load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  DatasetQuadruple ds;
  std::string line;
  std::size_t lineno = 0;
  bool have_instruction = false;
  std::unordered_set<std::string> query_ids, doc_ids, rel_queries;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    }
    try {
      if (!have_instruction) {
        if (!j.contains("instruction"))
          throw ParseError(lineno, "first line must be {\"instruction\": str}");
        ds.instruction = j.at("instruction").get<std::string>();
        have_instruction = true;
        continue;
      }
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "query") {
        Instance inst = parse_instance(j, lineno);
        if (!query_ids.insert(inst.id).second) throw DuplicateIdError(inst.id);
        ds.queries.push_back(std::move(inst));
      } else if (kind == "doc") {
        Instance inst = parse_instance(j, lineno);
        if (!doc_ids.insert(inst.id).second) throw DuplicateIdError(inst.id);
        ds.corpus.push_back(std::move(inst));
      } else if (kind == "rel") {
        RelEntry rel;
        rel.query = j.at("query").get<std::string>();
        if (!query_ids.count(rel.query)) throw DanglingIdError(rel.query);
        if (!rel_queries.insert(rel.query).second) throw DuplicateIdError(rel.query);
        for (const auto& id : j.at("pos")) {
          rel.positives.push_back(id.get<std::string>());
          if (!doc_ids.count(rel.positives.back())) throw DanglingIdError(rel.positives.back());
        }
        for (const auto& id : j.at("neg")) {
          rel.negatives.push_back(id.get<std::string>());
          if (!doc_ids.count(rel.negatives.back())) throw DanglingIdError(rel.negatives.back());
        }
        if (j.contains("scores")) {
          for (auto it = j.at("scores").begin(); it != j.at("scores").end(); ++it) {
            if (!doc_ids.count(it.key())) throw DanglingIdError(it.key());
            rel.scores[it.key()] = it.value().get<double>();
          }
        }
        ds.relevance.push_back(std::move(rel));
      } else {
        throw ParseError(lineno, "unknown kind: " + kind);
      }
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  if (!have_instruction) throw ParseError(0, "empty dataset file");
  return ds;
}

void save_dataset(const DatasetQuadruple& ds, const std::string& path) {
  std::ostringstream out;
  out << json{{"instruction", ds.instruction}}.dump() << "\n";
  auto dump_instance = [&](const Instance& inst, const char* kind) {
    json j{{"kind", kind}, {"id", inst.id}};
    j["parts"] = json::array();
    for (const auto& p : inst.parts) j["parts"].push_back(part_to_json(p));
    if (inst.embedding) j["embedding"] = *inst.embedding;
    out << j.dump() << "\n";
  };
  for (const auto& q : ds.queries) dump_instance(q, "query");
  for (const auto& d : ds.corpus) dump_instance(d, "doc");
  for (const auto& r : ds.relevance) {
    json j{{"kind", "rel"}, {"query", r.query}, {"pos", r.positives}, {"neg", r.negatives}};
    if (!r.scores.empty()) j["scores"] = r.scores;
    out << j.dump() << "\n";
  }
  atomic_write(path, out.str());
}

ValidationReport validate_dataset(const DatasetQuadruple& ds) {
  ValidationReport report;
  auto add = [&](const std::string& code, const std::string& id, const std::string& detail) {
    report.violations.push_back({code, id, detail});
  };

  // Declared embedding dimension: first embedding seen wins.
  std::size_t declared_dim = 0;
  auto check_instance = [&](const Instance& inst) {
    if (inst.parts.empty()) add("empty_instance", inst.id, "instance has no parts");
    if (inst.embedding) {
      if (!all_finite(*inst.embedding))
        add("non_finite_embedding", inst.id, "embedding has non-finite components");
      if (declared_dim == 0) {
        declared_dim = inst.embedding->size();
      } else if (inst.embedding->size() != declared_dim) {
        add("embedding_dim_mismatch", inst.id,
            "dim " + std::to_string(inst.embedding->size()) + " != declared " +
                std::to_string(declared_dim));
      }
    }
  };
  for (const auto& q : ds.queries) check_instance(q);
  for (const auto& d : ds.corpus) check_instance(d);

  for (const auto& r : ds.relevance) {
    if (r.positives.empty()) add("empty_positives", r.query, "query has no positive documents");
    std::unordered_set<std::string> pos(r.positives.begin(), r.positives.end());
    for (const auto& n : r.negatives)
      if (pos.count(n)) add("pos_neg_overlap", r.query, "doc " + n + " is both positive and negative");
    for (const auto& [id, s] : r.scores)
      if (!std::isfinite(s)) add("non_finite_score", r.query, "graded score for " + id);
  }
  return report;
}

}  // namespace qvle
