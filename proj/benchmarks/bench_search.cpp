// Microbenchmarks for the hot paths: brute-force search per precision,
// quantization kernels, and the contrastive loss.

#include <benchmark/benchmark.h>

#include "qvle/index.hpp"
#include "qvle/losses/losses.hpp"
#include "qvle/quant.hpp"
#include "qvle/random_batches.hpp"
#include "qvle/rng.hpp"
#include "qvle/synth.hpp"

using namespace qvle;

namespace {

synth::SynthCorpus& corpus() {
  static synth::SynthCorpus c = [] {
    synth::SynthConfig cfg;
    cfg.n_docs = 20000;
    cfg.n_queries = 64;
    cfg.dim = 512;
    cfg.clusters = 32;
    cfg.noise = 0.1;
    cfg.seed = 1;
    return synth::synth_corpus(cfg);
  }();
  return c;
}

void BM_Search(benchmark::State& state, index::Precision p) {
  auto& c = corpus();
  const auto idx = index::QuantizedIndex::build(c.docs, {static_cast<std::size_t>(state.range(0)), p});
  std::size_t qi = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(idx.search(c.queries.row(qi), 10));
    qi = (qi + 1) % c.queries.rows;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(c.docs.rows));
}

void BM_QuantizeInt8(benchmark::State& state) {
  auto& c = corpus();
  const double delta = quant::delta_init(c.docs);
  std::size_t r = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(quant::quantize_int8(c.docs.row(r), delta));
    r = (r + 1) % c.docs.rows;
  }
}

void BM_QuantizeBinary(benchmark::State& state) {
  auto& c = corpus();
  std::size_t r = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(quant::quantize_binary(c.docs.row(r)));
    r = (r + 1) % c.docs.rows;
  }
}

void BM_InfoNCE(benchmark::State& state) {
  Rng rng(3);
  auto b = random_batches::random_contrastive(rng, {8, 32, 4}, losses::Stage::Stage1);
  for (auto _ : state) benchmark::DoNotOptimize(losses::retrieval_infonce(b));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Search, f32, index::Precision::F32)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(BM_Search, int8, index::Precision::Int8)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(BM_Search, binary, index::Precision::Binary)->Arg(128)->Arg(512);
BENCHMARK(BM_QuantizeInt8);
BENCHMARK(BM_QuantizeBinary);
BENCHMARK(BM_InfoNCE);

BENCHMARK_MAIN();
