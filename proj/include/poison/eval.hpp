#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "poison/corpus.hpp"
#include "poison/encoder.hpp"
#include "poison/hotflip.hpp"
#include "poison/types.hpp"

namespace poison {

/// Precomputed passage embeddings plus the set of injected adversarial ids.
struct RetrievalIndex {
  std::vector<std::string> ids;
  Mat embeddings;  // one row per passage
  std::set<std::string> adversarial_ids;
  std::string model_id;

  Index size() const { return embeddings.rows(); }
  bool is_adversarial(Index row) const;
};

struct SuccessReport {
  int k = 0;
  double success_rate = 0;  // percentage in [0, 100]
  std::vector<char> hits;   // one flag per query, query-set order
  int num_adv = 0;
  std::uint64_t seed = 0;
};

struct TransferMatrix {
  std::vector<std::string> source_ids;
  std::vector<std::string> target_ids;
  Mat rates;  // source x target success percentages; diagonal = white box
};

struct NormReport {
  struct Stats {
    double mean = 0;
    double stddev = 0;
    double min = 0;
    double max = 0;
  };
  struct Bin {
    double low = 0;
    double high = 0;
    std::int64_t count_normal = 0;
    std::int64_t count_adv = 0;
  };
  Stats normal;
  Stats adversarial;
  std::vector<Bin> bins;  // 20 fixed-width bins spanning the pooled min..max
};

struct PassageTiming {
  int cluster_id = 0;
  double search_seconds = 0;
  std::int64_t gradient_evals = 0;
  std::int64_t objective_evals = 0;
};

/// Wall-clock split: Prep covers embedding, clustering and centroid
/// precompute; Search covers the substitution loops. Counters give the
/// machine-independent comparison.
struct TimingReport {
  double prep_seconds = 0;
  double search_seconds = 0;  // summed over passages
  std::int64_t gradient_evals = 0;
  std::int64_t objective_evals = 0;
  std::vector<PassageTiming> per_passage;
};

std::vector<TokenSeq> passage_tokens(const std::vector<AdversarialPassage>& passages);

/// Embeds every corpus passage once, in corpus order. Rows may be computed in
/// parallel; the result does not depend on `threads`.
RetrievalIndex build_index(const EncoderParams& params, const Corpus& corpus, int threads = 1);

/// Appends adversarial passages under ids `<prefix>00000`, `<prefix>00001`, ...
/// Original rows are untouched, so their relative order never changes.
void inject_adversarial(RetrievalIndex& index, const EncoderParams& params,
                        const std::vector<TokenSeq>& passages,
                        const std::string& prefix = "adv");

/// Scores of every indexed passage against one query embedding.
Vec score_all(const RetrievalIndex& index, const Vec& query_emb);

struct RetrievedItem {
  std::string id;
  Scalar score;
  bool adversarial;
};

/// Exact top-k by dot product. Ties break by original passages first, then
/// passage id ascending; the ordering biases against the attack.
std::vector<RetrievedItem> retrieve(const RetrievalIndex& index, const Vec& query_emb, int k);

/// Percentage of queries whose top-k contains at least one id from `adv_ids`.
SuccessReport attack_success_rate(const RetrievalIndex& index, const EncoderParams& q_params,
                                  const QuerySet& queries, int k,
                                  const std::set<std::string>& adv_ids, int threads = 1,
                                  std::uint64_t seed = 0);
/// Same, against every adversarial id in the index.
SuccessReport attack_success_rate(const RetrievalIndex& index, const EncoderParams& q_params,
                                  const QuerySet& queries, int k, int threads = 1,
                                  std::uint64_t seed = 0);

/// Injects each source's token sequences into each target model's index and
/// fills the success-rate matrix. All models must share one vocabulary.
TransferMatrix transfer_eval(
    const std::vector<std::pair<std::string, std::vector<TokenSeq>>>& adv_by_source,
    const std::vector<EncoderPair>& targets, const Corpus& corpus, const QuerySet& test_queries,
    int k, int threads = 1);

/// L2-norm summary of normal vs adversarial embedding rows, with a shared
/// 20-bin histogram. Requires at least one row of each kind.
NormReport norm_report(const RetrievalIndex& index);

struct TimedAttackResult {
  std::vector<AdversarialPassage> passages;
  TimingReport timing;
};

/// Full attack with the Prep/Search split measured. Queries are ignored in
/// corpus_centroid mode.
TimedAttackResult timed_attack(const EncoderPair& models, const QuerySet& train_queries,
                               const Corpus& corpus, int num_adv, const AttackConfig& cfg,
                               const std::vector<int>& snapshot_iters = {});

/// Mean fraction of each query's top-k occupied by its relevant documents.
double retrieval_precision(const EncoderPair& models, const Corpus& corpus,
                           const QuerySet& queries, const Qrels& qrels, int k, int threads = 1);

struct MetricRow {
  std::string experiment;
  std::uint64_t seed;
  std::string metric;
  double value;
};

/// CSV with header experiment,seed,metric,value; doubles printed with %.17g.
void save_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows);
/// CSV with header bin_low,bin_high,count_normal,count_adv.
void save_histogram_csv(const std::string& path, const NormReport& report);

std::string format_success_table(const std::vector<std::pair<std::uint64_t, double>>& by_seed,
                                 const std::string& metric);
std::string format_transfer_table(const TransferMatrix& matrix);

}  // namespace poison
