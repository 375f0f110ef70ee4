#pragma once

#include <string>
#include <vector>

#include "poison/corpus.hpp"
#include "poison/rng.hpp"
#include "poison/types.hpp"

namespace poison {

enum class Pooling { kMean, kGated };

std::string pooling_name(Pooling p);
Pooling pooling_from_name(const std::string& name);

/// Parameters of one encoder tower. Row t of `token_embeddings` is the
/// embedding e_t; the output of the tower is `projection * pool(rows)` where
/// pooling is either the positional mean or a content-gated softmax average.
struct EncoderParams {
  Mat token_embeddings;  // |V| x d
  Vec gate;              // d, used by gated pooling only
  Mat projection;        // d x d
  Pooling pooling = Pooling::kMean;
  std::string model_id;

  Index dim() const { return projection.rows(); }
  Index vocab_size() const { return token_embeddings.rows(); }
};

/// Query/passage encoder pair. When tied, both towers hold bit-identical
/// parameters and training keeps them that way.
struct EncoderPair {
  EncoderParams query;
  EncoderParams passage;
  bool tied = false;
};

EncoderParams random_encoder(Index vocab_size, Index dim, Pooling pooling, Rng& rng,
                             std::string model_id = "");
EncoderPair random_encoder_pair(Index vocab_size, Index dim, Pooling pooling, bool tied,
                                std::uint64_t seed, const std::string& model_id = "");

/// E(tokens): mean mode is projection * (1/L) sum_i e_{t_i}; gated mode is
/// projection * sum_i alpha_i e_{t_i} with alpha = softmax over positions of
/// gate . e_{t_i}. Accumulation order is fixed (position order).
Vec encode(const EncoderParams& params, const TokenSeq& tokens);

/// Plain dot product, no normalization.
Scalar similarity(const Vec& q, const Vec& p);

Vec mean_embedding(const std::vector<Vec>& embeddings);
/// Row-wise mean of an n x d matrix, accumulated in row order.
Vec mean_embedding(const Mat& rows);

/// Gradient of context . E_p(passage) with respect to the embedding used at
/// each passage position, one row per position. Positions holding the same
/// token id get their own rows; no aggregation across repeats.
///
/// With w = projection^T context, c_j = w . e_{t_j} and s = context . E_p(a):
///   mean:  row_j = (1/L) w
///   gated: row_j = alpha_j * (w + (c_j - s) * gate)
Mat grad_context_dot(const EncoderParams& p_params, const Vec& context, const TokenSeq& passage);
/// Single row of the above.
Vec grad_context_dot_at(const EncoderParams& p_params, const Vec& context, const TokenSeq& passage,
                        Index position);

/// Per-position gradient of sim(E_q(query), E_p(passage)) with respect to the
/// passage token embeddings. The query embedding is treated as a constant.
Mat grad_sim_wrt_token_embeddings(const EncoderParams& q_params, const EncoderParams& p_params,
                                  const TokenSeq& query_tokens, const TokenSeq& passage_tokens);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  // The 1/sqrt(d) init keeps logits near zero, so contrastive SGD needs a
  // large step to move them; ~2.0 diverges on gated pooling.
  double learning_rate = 1.0;
  std::uint64_t seed = 0;
};

struct TrainTrace {
  std::vector<double> epoch_loss;  // mean in-batch cross-entropy per epoch
};

/// In-batch-negative softmax cross-entropy over dot products, plain SGD.
/// Deterministic given the seed; single-threaded by contract. Every training
/// query must have at least one relevant document in the qrels.
TrainTrace train_contrastive(EncoderPair& pair, const Qrels& qrels, const Corpus& corpus,
                             const QuerySet& queries, const TrainConfig& cfg);

/// Model checkpoint: JSON with a format_version header, dims, pooling mode and
/// row-major matrices for both towers.
void save_model(const std::string& path, const EncoderPair& pair);
EncoderPair load_model(const std::string& path);

}  // namespace poison
