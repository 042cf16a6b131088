#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qvle/dataset.hpp"
#include "qvle/embedding_matrix.hpp"

namespace qvle::synth {

struct SynthConfig {
  std::size_t n_docs = 1000;
  std::size_t n_queries = 100;
  std::size_t dim = 256;
  std::size_t clusters = 10;
  double noise = 0.1;
  std::uint64_t seed = 42;
};

struct SynthCorpus {
  EmbeddingMatrix docs;     // ids d0000000...
  EmbeddingMatrix queries;  // ids q0000000...
  std::vector<RelEntry> relevance;  // one labeled positive per query
};

/// Clustered unit-vector corpus.  Cluster centers are mutually orthogonal
/// (Gram-Schmidt over seeded Gaussian draws), docs are centers perturbed by
/// noise along a random unit direction and re-normalized, and each query is
/// an independently perturbed copy of its labeled positive document.
/// With noise=0 every query equals its positive exactly.
/// Throws InfeasibleSeparationError when clusters > dim.
SynthCorpus synth_corpus(const SynthConfig& cfg);

}  // namespace qvle::synth
