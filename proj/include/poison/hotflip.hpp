#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "poison/cluster.hpp"
#include "poison/corpus.hpp"
#include "poison/encoder.hpp"
#include "poison/rng.hpp"
#include "poison/types.hpp"

namespace poison {

enum class AttackMode { kReproduced, kCentroid, kCorpusCentroid };

std::string attack_mode_name(AttackMode mode);
AttackMode attack_mode_from_name(const std::string& name);

struct AttackConfig {
  Index passage_len = 50;
  int max_iters = 5000;
  int top_n = 100;
  int batch_size = 64;
  AttackMode mode = AttackMode::kCentroid;
  std::set<TokenId> banned_tokens = {kPadId};
  std::uint64_t seed = 0;
  int threads = 1;  // fan-out across clusters; results are thread-count independent
};

void validate_config(const AttackConfig& cfg, Index vocab_size);

struct TraceEntry {
  int iteration;
  Scalar objective;
  bool accepted;
};

struct AdversarialPassage {
  TokenSeq tokens;
  int cluster_id = 0;
  std::vector<TraceEntry> objective_trace;
  std::string source_model_id;
  AttackMode mode = AttackMode::kCentroid;
  std::uint64_t seed = 0;
  // Objective recomputed from scratch on the final tokens against the
  // cluster's canonical target (full member set in reproduced mode).
  Scalar final_objective = 0;
  std::int64_t gradient_evals = 0;
  std::int64_t objective_evals = 0;
  double search_seconds = 0;
  std::map<int, TokenSeq> snapshots;  // iteration -> tokens, for I_max sweeps

  int accept_count() const;
};

/// Attack target for one optimization step: either a batch of query embedding
/// rows (reproduced mode) or a cached centroid vector (centroid modes).
class AttackTarget {
 public:
  static AttackTarget batch(Mat rows);
  static AttackTarget centroid(Vec center);

  bool is_batch() const { return is_batch_; }
  const Mat& rows() const { return rows_; }
  const Vec& center() const { return center_; }
  Index dim() const { return is_batch_ ? rows_.cols() : center_.size(); }

 private:
  AttackTarget() = default;
  bool is_batch_ = false;
  Mat rows_;
  Vec center_;
};

/// Uniformly samples a corpus passage and resizes it to `len`: truncated, or
/// padded by cycling its own tokens. Banned positions are resampled uniformly
/// from the allowed vocabulary.
TokenSeq init_adversarial(const Corpus& corpus, Index len, const std::set<TokenId>& banned,
                          Index vocab_size, Rng& rng);

/// The n allowed token ids maximizing e_t . grad, score-descending, ties to
/// the lower id. Scores are returned alongside.
std::vector<std::pair<TokenId, Scalar>> candidate_tokens(const Vec& grad,
                                                         const Mat& token_embeddings, int n,
                                                         const std::set<TokenId>& banned);

/// Exact objective used by the accept test: mean similarity over the batch in
/// reproduced mode, sim(centroid, E_p(a)) in centroid modes.
Scalar attack_objective(const AttackTarget& target, const TokenSeq& passage,
                        const EncoderParams& p_params);

struct StepResult {
  TokenSeq tokens;
  bool accepted = false;
  Scalar objective = 0;  // objective of the returned passage under this step's target
  std::int64_t gradient_evals = 0;
  std::int64_t objective_evals = 0;
};

/// One iteration of the substitution loop: pick a random position, rank
/// candidate tokens by the first-order score, re-score each candidate exactly,
/// and accept the best swap only on strict improvement.
StepResult hotflip_step(const EncoderParams& p_params, const AttackTarget& target,
                        const TokenSeq& passage, const AttackConfig& cfg, Rng& rng);

/// Per-cluster attack target. In reproduced mode `member_rows` is the pool the
/// per-iteration batches are sampled from; in centroid modes `center` is the
/// precomputed batch mean embedding.
struct ClusterTarget {
  Mat member_rows;
  Vec center;
};

struct AttackPlan {
  Clustering clustering;
  std::vector<ClusterTarget> targets;  // one per cluster
  std::string source_model_id;
  AttackMode mode = AttackMode::kCentroid;
};

/// Prep phase: embed, cluster, and precompute per-cluster targets.
AttackPlan prepare_query_attack(const EncoderPair& models, const QuerySet& train_queries,
                                int num_adv, const AttackConfig& cfg);
AttackPlan prepare_corpus_attack(const EncoderPair& models, const Corpus& corpus, int num_adv,
                                 const AttackConfig& cfg);

/// Search phase: runs the iteration loop for one cluster. The RNG stream is
/// derived from (cfg.seed, cluster_id), so passages are independent of
/// scheduling order.
AdversarialPassage generate_adversarial_passage(const EncoderParams& p_params,
                                                const ClusterTarget& target,
                                                const Corpus& init_corpus, const AttackConfig& cfg,
                                                int cluster_id,
                                                const std::vector<int>& snapshot_iters = {});

/// Search phase over all clusters, optionally fanned out over cfg.threads.
std::vector<AdversarialPassage> run_attack(const EncoderParams& p_params, const AttackPlan& plan,
                                           const Corpus& init_corpus, const AttackConfig& cfg,
                                           const std::vector<int>& snapshot_iters = {});

/// Full query-based pipeline: k-means over training-query embeddings, one
/// passage per cluster.
std::vector<AdversarialPassage> attack_corpus(const EncoderPair& models,
                                              const QuerySet& train_queries, const Corpus& corpus,
                                              int num_adv, const AttackConfig& cfg,
                                              const std::vector<int>& snapshot_iters = {});

/// Query-agnostic pipeline: clusters corpus passage embeddings and targets the
/// batch mean passage embedding. No query is read.
std::vector<AdversarialPassage> attack_corpus_query_agnostic(
    const EncoderPair& models, const Corpus& corpus, int num_adv, const AttackConfig& cfg,
    const std::vector<int>& snapshot_iters = {});

/// Unoptimized control: uniform random token sequences over the allowed
/// vocabulary, used as the random-injection baseline.
std::vector<TokenSeq> random_token_passages(int count, Index len, const std::set<TokenId>& banned,
                                            Index vocab_size, std::uint64_t seed);

/// Adversarial passage JSONL: one object per passage with fields cluster_id,
/// token_ids, text, final_objective, accept_count, source_model_id, mode, seed.
void save_adversarial_jsonl(const std::string& path,
                            const std::vector<AdversarialPassage>& passages,
                            const Vocabulary& vocab);
std::vector<AdversarialPassage> load_adversarial_jsonl(const std::string& path);

}  // namespace poison
