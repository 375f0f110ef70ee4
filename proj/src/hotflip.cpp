#include "poison/hotflip.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace poison {

namespace {

// Seed streams: kmeans seeding, centroid batch sampling, per-cluster search.
constexpr std::uint64_t kStreamKmeans = 0;
constexpr std::uint64_t kStreamBatch = 1;
constexpr std::uint64_t kStreamSearch = 2;

std::uint64_t search_seed(std::uint64_t seed, int cluster_id) {
  return mix_seed(mix_seed(seed, kStreamSearch), static_cast<std::uint64_t>(cluster_id));
}

std::vector<TokenId> allowed_ids(const std::set<TokenId>& banned, Index vocab_size) {
  std::vector<TokenId> out;
  out.reserve(static_cast<std::size_t>(vocab_size));
  for (TokenId t = 0; t < static_cast<TokenId>(vocab_size); ++t) {
    if (!banned.count(t)) out.push_back(t);
  }
  return out;
}

Mat embed_rows(const EncoderParams& params, const std::vector<TokenSeq>& seqs) {
  Mat rows(static_cast<Index>(seqs.size()), params.dim());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    rows.row(static_cast<Index>(i)) = encode(params, seqs[i]).transpose();
  }
  return rows;
}

Mat gather_rows(const Mat& rows, const std::vector<Index>& idx) {
  Mat out(static_cast<Index>(idx.size()), rows.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Index>(i)) = rows.row(idx[i]);
  }
  return out;
}

// Sampled batch of member rows; the whole cluster when it is smaller than the
// requested batch size.
Mat sample_batch(const Mat& members, int batch_size, Rng& rng) {
  const Index m = members.rows();
  if (m <= static_cast<Index>(batch_size)) return members;
  std::vector<std::size_t> picked =
      rng.sample_without_replacement(static_cast<std::size_t>(m), static_cast<std::size_t>(batch_size));
  std::vector<Index> idx(picked.begin(), picked.end());
  return gather_rows(members, idx);
}

AttackPlan build_plan(const Mat& embedded, const EncoderParams& plan_model, int num_adv,
                      const AttackConfig& cfg) {
  if (num_adv < 1) throw std::invalid_argument("num_adv must be >= 1");
  if (embedded.rows() < static_cast<Index>(num_adv)) {
    throw std::invalid_argument("fewer target points than requested passages");
  }
  AttackPlan plan;
  plan.mode = cfg.mode;
  plan.source_model_id = plan_model.model_id;
  plan.clustering = kmeans(embedded, num_adv, 100, mix_seed(cfg.seed, kStreamKmeans));
  plan.targets.resize(static_cast<std::size_t>(num_adv));
  for (int c = 0; c < num_adv; ++c) {
    std::vector<Index> idx;
    for (Index i = 0; i < embedded.rows(); ++i) {
      if (plan.clustering.assignment[static_cast<std::size_t>(i)] == c) idx.push_back(i);
    }
    ClusterTarget& target = plan.targets[static_cast<std::size_t>(c)];
    target.member_rows = gather_rows(embedded, idx);
    Rng batch_rng(mix_seed(mix_seed(cfg.seed, kStreamBatch), static_cast<std::uint64_t>(c)));
    target.center = mean_embedding(sample_batch(target.member_rows, cfg.batch_size, batch_rng));
  }
  return plan;
}

}  // namespace

std::string attack_mode_name(AttackMode mode) {
  switch (mode) {
    case AttackMode::kReproduced: return "reproduced";
    case AttackMode::kCentroid: return "centroid";
    case AttackMode::kCorpusCentroid: return "corpus_centroid";
  }
  throw std::logic_error("unknown attack mode");
}

AttackMode attack_mode_from_name(const std::string& name) {
  if (name == "reproduced") return AttackMode::kReproduced;
  if (name == "centroid") return AttackMode::kCentroid;
  if (name == "corpus_centroid") return AttackMode::kCorpusCentroid;
  throw std::invalid_argument("unknown attack mode: " + name);
}

void validate_config(const AttackConfig& cfg, Index vocab_size) {
  if (cfg.passage_len < 1) throw std::invalid_argument("passage_len must be >= 1");
  if (cfg.max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (cfg.top_n < 1) throw std::invalid_argument("top_n must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (cfg.threads < 1) throw std::invalid_argument("threads must be >= 1");
  Index allowed = vocab_size;
  for (TokenId t : cfg.banned_tokens) {
    if (t >= 0 && t < static_cast<TokenId>(vocab_size)) --allowed;
  }
  if (allowed < 1) throw std::invalid_argument("banned_tokens covers the whole vocabulary");
  if (static_cast<Index>(cfg.top_n) > allowed) {
    throw std::invalid_argument("top_n exceeds the number of allowed tokens");
  }
}

int AdversarialPassage::accept_count() const {
  int n = 0;
  for (const TraceEntry& entry : objective_trace) {
    if (entry.accepted) ++n;
  }
  return n;
}

AttackTarget AttackTarget::batch(Mat rows) {
  if (rows.rows() < 1) throw std::invalid_argument("attack target batch is empty");
  AttackTarget t;
  t.is_batch_ = true;
  t.rows_ = std::move(rows);
  return t;
}

AttackTarget AttackTarget::centroid(Vec center) {
  if (center.size() < 1) throw std::invalid_argument("attack target centroid is empty");
  AttackTarget t;
  t.is_batch_ = false;
  t.center_ = std::move(center);
  return t;
}

TokenSeq init_adversarial(const Corpus& corpus, Index len, const std::set<TokenId>& banned,
                          Index vocab_size, Rng& rng) {
  if (corpus.size() == 0) throw std::invalid_argument("init corpus is empty");
  if (len < 1) throw std::invalid_argument("passage length must be >= 1");
  const std::vector<TokenId> allowed = allowed_ids(banned, vocab_size);
  if (allowed.empty()) throw std::invalid_argument("no allowed tokens");
  const TokenSeq& src = corpus.documents[rng.uniform_int(corpus.size())].tokens;
  TokenSeq out(static_cast<std::size_t>(len));
  for (std::size_t i = 0; i < out.size(); ++i) {
    TokenId t = src.empty() ? TokenId{-1} : src[i % src.size()];
    if (t < 0 || t >= static_cast<TokenId>(vocab_size) || banned.count(t)) {
      t = allowed[rng.uniform_int(allowed.size())];
    }
    out[i] = t;
  }
  return out;
}

std::vector<std::pair<TokenId, Scalar>> candidate_tokens(const Vec& grad,
                                                         const Mat& token_embeddings, int n,
                                                         const std::set<TokenId>& banned) {
  if (grad.size() != token_embeddings.cols()) {
    throw std::invalid_argument("gradient dimension does not match embeddings");
  }
  const Vec scores = token_embeddings * grad;
  std::vector<TokenId> ids = allowed_ids(banned, token_embeddings.rows());
  if (n < 1 || static_cast<std::size_t>(n) > ids.size()) {
    throw std::invalid_argument("candidate count out of range");
  }
  auto better = [&scores](TokenId a, TokenId b) {
    const Scalar sa = scores[a];
    const Scalar sb = scores[b];
    if (sa != sb) return sa > sb;
    return a < b;
  };
  std::partial_sort(ids.begin(), ids.begin() + n, ids.end(), better);
  std::vector<std::pair<TokenId, Scalar>> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.emplace_back(ids[static_cast<std::size_t>(i)], scores[ids[static_cast<std::size_t>(i)]]);
  return out;
}

Scalar attack_objective(const AttackTarget& target, const TokenSeq& passage,
                        const EncoderParams& p_params) {
  const Vec e = encode(p_params, passage);
  if (target.dim() != e.size()) throw std::invalid_argument("target dimension mismatch");
  if (!target.is_batch()) return target.center().dot(e);
  const Mat& rows = target.rows();
  Scalar acc = 0;
  for (Index i = 0; i < rows.rows(); ++i) acc += rows.row(i).dot(e);
  return acc / static_cast<Scalar>(rows.rows());
}

StepResult hotflip_step(const EncoderParams& p_params, const AttackTarget& target,
                        const TokenSeq& passage, const AttackConfig& cfg, Rng& rng) {
  if (passage.empty()) throw std::invalid_argument("passage is empty");
  const Index pos = static_cast<Index>(rng.uniform_int(passage.size()));

  StepResult result;
  Vec grad;
  if (target.is_batch()) {
    // One backward pass per query in the batch, then the mean. The objective
    // is the batch mean similarity, so its gradient is the mean of the
    // per-query gradients.
    const Mat& rows = target.rows();
    grad = Vec::Zero(p_params.dim());
    for (Index i = 0; i < rows.rows(); ++i) {
      const Vec context = rows.row(i).transpose();
      grad += grad_context_dot_at(p_params, context, passage, pos);
    }
    grad /= static_cast<Scalar>(rows.rows());
    result.gradient_evals = rows.rows();
  } else {
    grad = grad_context_dot_at(p_params, target.center(), passage, pos);
    result.gradient_evals = 1;
  }

  const auto candidates = candidate_tokens(grad, p_params.token_embeddings, cfg.top_n,
                                           cfg.banned_tokens);

  Scalar best_obj = attack_objective(target, passage, p_params);
  result.objective_evals = 1;
  TokenId best_tok = passage[static_cast<std::size_t>(pos)];
  bool accepted = false;
  TokenSeq probe = passage;
  for (const auto& [tok, score] : candidates) {
    (void)score;
    probe[static_cast<std::size_t>(pos)] = tok;
    const Scalar obj = attack_objective(target, probe, p_params);
    ++result.objective_evals;
    if (obj > best_obj) {
      best_obj = obj;
      best_tok = tok;
      accepted = true;
    } else if (accepted && obj == best_obj && tok < best_tok) {
      best_tok = tok;
    }
  }

  result.tokens = passage;
  if (accepted) result.tokens[static_cast<std::size_t>(pos)] = best_tok;
  result.accepted = accepted;
  result.objective = best_obj;
  return result;
}

AttackPlan prepare_query_attack(const EncoderPair& models, const QuerySet& train_queries,
                                int num_adv, const AttackConfig& cfg) {
  validate_config(cfg, models.passage.vocab_size());
  if (cfg.mode == AttackMode::kCorpusCentroid) {
    throw std::invalid_argument("corpus_centroid mode takes the corpus, not queries");
  }
  std::vector<TokenSeq> seqs;
  seqs.reserve(train_queries.queries.size());
  for (const Document& q : train_queries.queries) {
    if (q.tokens.empty()) throw std::invalid_argument("query " + q.id + " has no tokens");
    seqs.push_back(q.tokens);
  }
  return build_plan(embed_rows(models.query, seqs), models.passage, num_adv, cfg);
}

AttackPlan prepare_corpus_attack(const EncoderPair& models, const Corpus& corpus, int num_adv,
                                 const AttackConfig& cfg) {
  validate_config(cfg, models.passage.vocab_size());
  if (cfg.mode != AttackMode::kCorpusCentroid) {
    throw std::invalid_argument("corpus clustering requires corpus_centroid mode");
  }
  std::vector<TokenSeq> seqs;
  seqs.reserve(corpus.size());
  for (const Document& doc : corpus.documents) {
    if (doc.tokens.empty()) throw std::invalid_argument("document " + doc.id + " has no tokens");
    seqs.push_back(doc.tokens);
  }
  return build_plan(embed_rows(models.passage, seqs), models.passage, num_adv, cfg);
}

AdversarialPassage generate_adversarial_passage(const EncoderParams& p_params,
                                                const ClusterTarget& target,
                                                const Corpus& init_corpus, const AttackConfig& cfg,
                                                int cluster_id,
                                                const std::vector<int>& snapshot_iters) {
  validate_config(cfg, p_params.vocab_size());
  const std::set<int> snap(snapshot_iters.begin(), snapshot_iters.end());
  Rng rng(search_seed(cfg.seed, cluster_id));

  AdversarialPassage adv;
  adv.cluster_id = cluster_id;
  adv.mode = cfg.mode;
  adv.seed = cfg.seed;
  adv.source_model_id = p_params.model_id;
  adv.objective_trace.reserve(static_cast<std::size_t>(cfg.max_iters));

  const auto t0 = std::chrono::steady_clock::now();
  adv.tokens = init_adversarial(init_corpus, cfg.passage_len, cfg.banned_tokens,
                                p_params.vocab_size(), rng);
  if (snap.count(0)) adv.snapshots[0] = adv.tokens;

  const bool per_batch = cfg.mode == AttackMode::kReproduced;
  AttackTarget fixed = per_batch ? AttackTarget::batch(target.member_rows)
                                 : AttackTarget::centroid(target.center);
  for (int it = 0; it < cfg.max_iters; ++it) {
    // Reproduced mode re-samples the query batch every iteration; the accept
    // test is against that iteration's batch.
    const AttackTarget step_target =
        per_batch ? AttackTarget::batch(sample_batch(target.member_rows, cfg.batch_size, rng))
                  : fixed;
    StepResult step = hotflip_step(p_params, step_target, adv.tokens, cfg, rng);
    adv.tokens = std::move(step.tokens);
    adv.gradient_evals += step.gradient_evals;
    adv.objective_evals += step.objective_evals;
    adv.objective_trace.push_back({it, step.objective, step.accepted});
    if (snap.count(it + 1)) adv.snapshots[it + 1] = adv.tokens;
  }
  const auto t1 = std::chrono::steady_clock::now();
  adv.search_seconds = std::chrono::duration<double>(t1 - t0).count();

  // Not counted as search work: bookkeeping against the canonical target
  // (the full member set in reproduced mode, the cached centroid otherwise).
  adv.final_objective = attack_objective(fixed, adv.tokens, p_params);
  return adv;
}

std::vector<AdversarialPassage> run_attack(const EncoderParams& p_params, const AttackPlan& plan,
                                           const Corpus& init_corpus, const AttackConfig& cfg,
                                           const std::vector<int>& snapshot_iters) {
  validate_config(cfg, p_params.vocab_size());
  const std::size_t k = plan.targets.size();
  std::vector<AdversarialPassage> out(k);
  auto generate = [&](std::size_t c) {
    out[c] = generate_adversarial_passage(p_params, plan.targets[c], init_corpus, cfg,
                                          static_cast<int>(c), snapshot_iters);
  };
  const int workers = std::min<int>(cfg.threads, static_cast<int>(k));
  if (workers <= 1) {
    for (std::size_t c = 0; c < k; ++c) generate(c);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= k) return;
      try {
        generate(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return out;
}

std::vector<AdversarialPassage> attack_corpus(const EncoderPair& models,
                                              const QuerySet& train_queries, const Corpus& corpus,
                                              int num_adv, const AttackConfig& cfg,
                                              const std::vector<int>& snapshot_iters) {
  AttackPlan plan = prepare_query_attack(models, train_queries, num_adv, cfg);
  return run_attack(models.passage, plan, corpus, cfg, snapshot_iters);
}

std::vector<AdversarialPassage> attack_corpus_query_agnostic(
    const EncoderPair& models, const Corpus& corpus, int num_adv, const AttackConfig& cfg,
    const std::vector<int>& snapshot_iters) {
  AttackPlan plan = prepare_corpus_attack(models, corpus, num_adv, cfg);
  return run_attack(models.passage, plan, corpus, cfg, snapshot_iters);
}

std::vector<TokenSeq> random_token_passages(int count, Index len, const std::set<TokenId>& banned,
                                            Index vocab_size, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("count must be >= 0");
  if (len < 1) throw std::invalid_argument("passage length must be >= 1");
  const std::vector<TokenId> allowed = allowed_ids(banned, vocab_size);
  if (allowed.empty()) throw std::invalid_argument("no allowed tokens");
  std::vector<TokenSeq> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    TokenSeq seq(static_cast<std::size_t>(len));
    for (auto& t : seq) t = allowed[rng.uniform_int(allowed.size())];
    out.push_back(std::move(seq));
  }
  return out;
}

void save_adversarial_jsonl(const std::string& path,
                            const std::vector<AdversarialPassage>& passages,
                            const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const AdversarialPassage& adv : passages) {
    nlohmann::json record{{"cluster_id", adv.cluster_id},
                          {"token_ids", adv.tokens},
                          {"text", detokenize(adv.tokens, vocab)},
                          {"final_objective", adv.final_objective},
                          {"accept_count", adv.accept_count()},
                          {"source_model_id", adv.source_model_id},
                          {"mode", attack_mode_name(adv.mode)},
                          {"seed", adv.seed}};
    out << record.dump() << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<AdversarialPassage> load_adversarial_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<AdversarialPassage> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    const std::string where = path + ":" + std::to_string(line_no);
    if (record.is_discarded()) throw std::runtime_error(where + ": malformed JSON");
    try {
      AdversarialPassage adv;
      adv.cluster_id = record.at("cluster_id").get<int>();
      adv.tokens = record.at("token_ids").get<TokenSeq>();
      adv.final_objective = record.at("final_objective").get<Scalar>();
      adv.source_model_id = record.at("source_model_id").get<std::string>();
      adv.mode = attack_mode_from_name(record.at("mode").get<std::string>());
      adv.seed = record.at("seed").get<std::uint64_t>();
      const int accepts = record.at("accept_count").get<int>();
      adv.objective_trace.assign(static_cast<std::size_t>(accepts),
                                 TraceEntry{0, adv.final_objective, true});
      out.push_back(std::move(adv));
    } catch (const nlohmann::json::exception& ex) {
      throw std::runtime_error(where + ": " + ex.what());
    }
  }
  return out;
}

}  // namespace poison
