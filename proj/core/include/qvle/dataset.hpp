#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qvle/vec.hpp"

namespace qvle {

enum class PartKind { Text, ImageRef, VideoRef };

struct Part {
  PartKind kind = PartKind::Text;
  std::string value;  // text content, or an opaque media path (never decoded)
};

/// One query or corpus entry: an ordered list of modality parts plus an
/// optional precomputed embedding.
struct Instance {
  std::string id;
  std::vector<Part> parts;
  std::optional<Vec> embedding;
};

/// Relevance entry for one query: positive/negative doc ids and optional
/// graded scores (STS-style data shares the schema).
struct RelEntry {
  std::string query;
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
  std::map<std::string, double> scores;  // doc id -> graded score
};

/// The (Instruction, Queries, Corpus, RelevanceLabels) quadruple.
struct DatasetQuadruple {
  std::string instruction;
  std::vector<Instance> queries;
  std::vector<Instance> corpus;
  std::vector<RelEntry> relevance;

  const Instance* find_query(const std::string& id) const;
  const Instance* find_doc(const std::string& id) const;
};

struct Violation {
  std::string code;
  std::string id;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Loads the JSONL dataset format.  Line 1 is {"instruction": str}; then
/// instance lines (kind = query|doc) and relevance lines (kind = rel).
/// Throws ParseError / DanglingIdError / DuplicateIdError.
DatasetQuadruple load_dataset(const std::string& path);

void save_dataset(const DatasetQuadruple& ds, const std::string& path);

/// Report-based check of training-readiness invariants: non-empty positives,
/// pos/neg disjointness, consistent embedding dimensions, finite scores.
ValidationReport validate_dataset(const DatasetQuadruple& ds);

}  // namespace qvle
