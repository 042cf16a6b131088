// qvle: retrieval-engineering toolkit over embedding arrays.
//
// Exit codes: 0 success, 1 validation/data failure, 2 usage error.
// Every output file is written atomically (temp file + rename), and every
// subcommand is deterministic under a fixed --seed except latency fields.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qvle/bench.hpp"
#include "qvle/binio.hpp"
#include "qvle/dataset.hpp"
#include "qvle/errors.hpp"
#include "qvle/grad_suite.hpp"
#include "qvle/index.hpp"
#include "qvle/io_util.hpp"
#include "qvle/merge.hpp"
#include "qvle/metrics.hpp"
#include "qvle/mining.hpp"
#include "qvle/parallel.hpp"
#include "qvle/quant.hpp"
#include "qvle/rerank.hpp"
#include "qvle/synth.hpp"

namespace {

struct GlobalOpts {
  std::uint64_t seed = 42;
  std::size_t threads = 1;
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

nlohmann::json rel_to_json(const qvle::RelEntry& rel) {
  nlohmann::json j{{"query", rel.query}, {"pos", rel.positives}, {"neg", rel.negatives}};
  if (!rel.scores.empty()) j["scores"] = rel.scores;
  return j;
}

// ---- validate ----------------------------------------------------------

int cmd_validate(const std::string& path) {
  qvle::DatasetQuadruple ds;
  try {
    ds = qvle::load_dataset(path);
  } catch (const qvle::Error& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return 1;
  }
  const auto report = qvle::validate_dataset(ds);
  for (const auto& v : report.violations)
    std::cerr << v.code << " " << v.id << (v.detail.empty() ? "" : ": " + v.detail) << "\n";
  if (!report.ok()) return 1;
  std::cout << "ok: " << ds.queries.size() << " queries, " << ds.corpus.size()
            << " docs, " << ds.relevance.size() << " relevance entries\n";
  return 0;
}

// ---- mine ---------------------------------------------------------------

int cmd_mine(const GlobalOpts& g, const std::string& dataset_path,
             const std::string& emb_path, std::size_t k, double t_plus, double delta_minus,
             const std::string& out_path, const std::string& audit_path) {
  qvle::DatasetQuadruple ds = qvle::load_dataset(dataset_path);

  qvle::mining::MiningConfig cfg;
  cfg.k = k;
  cfg.t_plus = t_plus;
  cfg.delta_minus = delta_minus;
  cfg.threads = g.threads;
  if (!emb_path.empty()) {
    auto loaded = std::make_shared<qvle::LoadedEmbeddings>(qvle::load_embeddings(emb_path));
    cfg.embedder = [loaded](const qvle::Instance& inst) -> qvle::Vec {
      for (std::size_t r = 0; r < loaded->matrix.rows; ++r)
        if (loaded->matrix.ids[r] == inst.id) {
          auto row = loaded->matrix.row(r);
          return qvle::Vec(row.begin(), row.end());
        }
      throw qvle::EmbedderFailureError(inst.id);
    };
  }

  const auto mined = qvle::mining::mine(ds, cfg);

  std::string out;
  for (const auto& rel : mined.refined) out += rel_to_json(rel).dump() + "\n";
  qvle::atomic_write(out_path, out);

  if (!audit_path.empty()) {
    std::string audit;
    for (const auto& kq : mined.kept)
      audit += nlohmann::json{{"query", kq.query_id},
                              {"status", "kept"},
                              {"s_bar_plus", kq.s_bar_plus},
                              {"refined_positives", kq.refined_positives}}
                   .dump() +
               "\n";
    for (const auto& dq : mined.discarded)
      audit += nlohmann::json{{"query", dq.query_id},
                              {"status", "discarded"},
                              {"reason", dq.reason}}
                   .dump() +
               "\n";
    qvle::atomic_write(audit_path, audit);
  }
  std::cout << "kept " << mined.kept.size() << ", discarded " << mined.discarded.size()
            << " -> " << out_path << "\n";
  return 0;
}

// ---- loss-check ---------------------------------------------------------

int cmd_loss_check(const GlobalOpts& g, std::size_t batches) {
  const auto results = qvle::grad_suite::run(g.seed, batches);
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%-28s max_rel_err=%.3e tol=%.0e %s\n", r.family.c_str(), r.max_rel_err,
                r.tolerance, r.ok() ? "ok" : "FAIL");
    ok = ok && r.ok();
  }
  return ok ? 0 : 1;
}

// ---- quantize -----------------------------------------------------------

int cmd_quantize(const std::string& in_path, const std::string& mode,
                 const std::string& out_path, double delta) {
  const auto loaded = qvle::load_embeddings(in_path);
  if (mode == "binary") {
    qvle::save_embeddings(out_path, loaded.matrix, qvle::Dtype::Bit);
  } else if (mode == "int8") {
    const double d = delta > 0.0 ? delta : qvle::quant::delta_init(loaded.matrix);
    qvle::save_embeddings(out_path, loaded.matrix, qvle::Dtype::I8, d);
    std::cout << "delta " << d << "\n";
  } else {
    std::cerr << "unknown mode: " << mode << " (expected int8 or binary)\n";
    return 2;
  }
  std::cout << loaded.matrix.rows << " vectors -> " << out_path << "\n";
  return 0;
}

// ---- bench --------------------------------------------------------------

int cmd_bench(const GlobalOpts& g, const std::string& emb_path, const std::string& q_path,
              const std::string& qrels_path, const std::string& dims_csv,
              const std::string& precisions_csv, std::size_t k, const std::string& out_path) {
  const auto corpus = qvle::load_embeddings(emb_path);
  const auto queries = qvle::load_embeddings(q_path);
  const auto qrels = qvle::metrics::qrels_from_jsonl(qvle::read_file(qrels_path));

  qvle::bench::BenchConfig cfg;
  for (const auto& d : split_csv(dims_csv)) cfg.dims.push_back(std::stoul(d));
  for (const auto& p : split_csv(precisions_csv))
    cfg.precisions.push_back(qvle::index::precision_from_string(p));
  cfg.top_k = k;
  cfg.threads = g.threads;

  const auto report = qvle::bench::bench_grid(corpus.matrix, queries.matrix, qrels, cfg);
  qvle::atomic_write(out_path, report.to_json());
  std::cout << report.human_summary();
  return 0;
}

// ---- search -------------------------------------------------------------

int cmd_search(const GlobalOpts& g, const std::string& emb_path, const std::string& q_path,
               std::size_t dim, const std::string& precision, std::size_t k,
               const std::string& out_path) {
  const auto corpus = qvle::load_embeddings(emb_path);
  const auto queries = qvle::load_embeddings(q_path);
  const std::size_t d = dim == 0 ? corpus.matrix.dim : dim;
  const auto idx = qvle::index::QuantizedIndex::build(
      corpus.matrix, {d, qvle::index::precision_from_string(precision)});

  qvle::metrics::RetrievalRun run(queries.matrix.rows);
  qvle::parallel_for(queries.matrix.rows, g.threads, [&](std::size_t qi) {
    run[qi] = {queries.matrix.ids[qi], idx.search(queries.matrix.row(qi), k)};
  });
  qvle::atomic_write(out_path, qvle::metrics::run_to_json(run));
  std::cout << run.size() << " queries -> " << out_path << "\n";
  return 0;
}

// ---- rerank -------------------------------------------------------------

int cmd_rerank(const std::string& run_path, const std::string& logits_path, std::size_t top_n,
               const std::string& out_path) {
  const auto run = qvle::metrics::run_from_json(qvle::read_file(run_path));
  const auto scorer = qvle::rerank::make_file_scorer(logits_path);
  const auto reranked = qvle::rerank::rerank_run(run, scorer, "", top_n);
  qvle::atomic_write(out_path, qvle::metrics::run_to_json(reranked));
  std::cout << reranked.size() << " queries -> " << out_path << "\n";
  return 0;
}

// ---- merge --------------------------------------------------------------

int cmd_merge(const std::string& in_csv, const std::string& weights_csv,
              const std::string& out_path) {
  std::vector<qvle::merge::ParamSet> inputs;
  for (const auto& p : split_csv(in_csv)) inputs.push_back(qvle::merge::load_paramset(p));
  std::vector<double> weights;
  for (const auto& w : split_csv(weights_csv)) weights.push_back(std::stod(w));
  const auto merged = qvle::merge::merge_checkpoints(inputs, weights);
  qvle::merge::save_paramset(out_path, merged);
  std::cout << inputs.size() << " checkpoints -> " << out_path << "\n";
  return 0;
}

// ---- synth-corpus -------------------------------------------------------

int cmd_synth(const GlobalOpts& g, std::size_t n_docs, std::size_t n_queries, std::size_t dim,
              std::size_t clusters, double noise, const std::string& out_dir) {
  qvle::synth::SynthConfig cfg{n_docs, n_queries, dim, clusters, noise, g.seed};
  const auto corpus = qvle::synth::synth_corpus(cfg);
  qvle::save_embeddings(out_dir + "/emb.bin", corpus.docs, qvle::Dtype::F64);
  qvle::save_embeddings(out_dir + "/q.bin", corpus.queries, qvle::Dtype::F64);
  std::string rels;
  for (const auto& rel : corpus.relevance) rels += rel_to_json(rel).dump() + "\n";
  qvle::atomic_write(out_dir + "/rels.jsonl", rels);
  std::cout << n_docs << " docs, " << n_queries << " queries -> " << out_dir
            << "/{emb.bin,q.bin,rels.jsonl}\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"retrieval-engineering toolkit: losses, mining, quantization, "
               "indexing, reranking, checkpoint merging"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags override it");

  GlobalOpts g;
  app.add_option("--seed", g.seed, "global RNG seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker thread cap")->capture_default_str();

  // validate
  std::string v_path;
  auto* validate = app.add_subcommand("validate", "check a dataset file's invariants");
  validate->add_option("dataset", v_path, "dataset JSONL path")->required();

  // mine
  std::string m_dataset, m_emb, m_out = "mined.jsonl", m_audit;
  std::size_t m_k = 100;
  double m_tplus = 0.4, m_dminus = 0.1;
  auto* mine = app.add_subcommand("mine", "hard-negative mining pipeline");
  mine->add_option("--dataset", m_dataset)->required();
  mine->add_option("--embeddings", m_emb, "embedding file for instances without inline vectors");
  mine->add_option("--k", m_k)->capture_default_str();
  mine->add_option("--t-plus", m_tplus)->capture_default_str();
  mine->add_option("--delta-minus", m_dminus)->capture_default_str();
  mine->add_option("--out", m_out)->capture_default_str();
  mine->add_option("--audit", m_audit, "kept/discarded audit JSONL");

  // loss-check
  std::size_t lc_batches = 100;
  auto* loss_check = app.add_subcommand("loss-check", "finite-difference gradient suite");
  loss_check->add_option("--batches", lc_batches, "batches per loss family")
      ->capture_default_str();

  // quantize
  std::string q_in, q_mode = "int8", q_out;
  double q_delta = 0.0;
  auto* quantize = app.add_subcommand("quantize", "quantize an embedding file");
  quantize->add_option("--in", q_in)->required();
  quantize->add_option("--mode", q_mode, "int8 | binary")->capture_default_str();
  quantize->add_option("--delta", q_delta, "int8 step size (default: 2*mean|v|/sqrt(127))");
  quantize->add_option("--out", q_out)->required();

  // bench
  std::string b_emb, b_q, b_qrels, b_dims = "64,128,256,512,1024",
              b_prec = "f32,int8,binary", b_out = "report.json";
  std::size_t b_k = 10;
  auto* bench = app.add_subcommand("bench", "dimension x precision tradeoff grid");
  bench->add_option("--emb", b_emb)->required();
  bench->add_option("--queries", b_q)->required();
  bench->add_option("--qrels", b_qrels)->required();
  bench->add_option("--dims", b_dims)->capture_default_str();
  bench->add_option("--precisions", b_prec)->capture_default_str();
  bench->add_option("--k", b_k)->capture_default_str();
  bench->add_option("--out", b_out)->capture_default_str();

  // search
  std::string s_emb, s_q, s_prec = "f32", s_out = "run.json";
  std::size_t s_dim = 0, s_k = 10;
  auto* search = app.add_subcommand("search", "exact top-k retrieval run");
  search->add_option("--emb", s_emb)->required();
  search->add_option("--queries", s_q)->required();
  search->add_option("--dim", s_dim, "prefix dimension (0 = full)")->capture_default_str();
  search->add_option("--precision", s_prec)->capture_default_str();
  search->add_option("--k", s_k)->capture_default_str();
  search->add_option("--out", s_out)->capture_default_str();

  // rerank
  std::string r_run, r_logits, r_out = "reranked.json";
  std::size_t r_topn = 100;
  auto* rerank = app.add_subcommand("rerank", "rerank a retrieval run with stored logits");
  rerank->add_option("--run", r_run)->required();
  rerank->add_option("--logits", r_logits)->required();
  rerank->add_option("--top-n", r_topn)->capture_default_str();
  rerank->add_option("--out", r_out)->capture_default_str();

  // merge
  std::string mg_in, mg_weights, mg_out;
  auto* merge = app.add_subcommand("merge", "weighted checkpoint interpolation");
  merge->add_option("--in", mg_in, "comma-separated checkpoint files")->required();
  merge->add_option("--weights", mg_weights, "comma-separated weights")->required();
  merge->add_option("--out", mg_out)->required();

  // synth-corpus
  std::size_t sc_docs = 1000, sc_queries = 100, sc_dim = 256, sc_clusters = 10;
  double sc_noise = 0.1;
  std::string sc_out = ".";
  auto* synth = app.add_subcommand("synth-corpus", "clustered synthetic embedding corpus");
  synth->add_option("--docs", sc_docs)->capture_default_str();
  synth->add_option("--queries", sc_queries)->capture_default_str();
  synth->add_option("--dim", sc_dim)->capture_default_str();
  synth->add_option("--clusters", sc_clusters)->capture_default_str();
  synth->add_option("--noise", sc_noise)->capture_default_str();
  synth->add_option("--out-dir", sc_out)->capture_default_str();

  // let --seed/--threads/--config appear after the subcommand too
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (g.threads == 0) g.threads = 1;
  std::cerr << "config: seed=" << g.seed << " threads=" << g.threads << "\n";

  try {
    if (*validate) return cmd_validate(v_path);
    if (*mine) return cmd_mine(g, m_dataset, m_emb, m_k, m_tplus, m_dminus, m_out, m_audit);
    if (*loss_check) return cmd_loss_check(g, lc_batches);
    if (*quantize) return cmd_quantize(q_in, q_mode, q_out, q_delta);
    if (*bench) return cmd_bench(g, b_emb, b_q, b_qrels, b_dims, b_prec, b_k, b_out);
    if (*search) return cmd_search(g, s_emb, s_q, s_dim, s_prec, s_k, s_out);
    if (*rerank) return cmd_rerank(r_run, r_logits, r_topn, r_out);
    if (*merge) return cmd_merge(mg_in, mg_weights, mg_out);
    if (*synth) return cmd_synth(g, sc_docs, sc_queries, sc_dim, sc_clusters, sc_noise, sc_out);
  } catch (const qvle::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
