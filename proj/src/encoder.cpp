#include "poison/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace poison {

std::string pooling_name(Pooling p) { return p == Pooling::kMean ? "mean" : "gated"; }

Pooling pooling_from_name(const std::string& name) {
  if (name == "mean") return Pooling::kMean;
  if (name == "gated") return Pooling::kGated;
  throw std::invalid_argument("unknown pooling mode: " + name);
}

namespace {

void check_tokens(const EncoderParams& params, const TokenSeq& tokens) {
  if (tokens.empty()) throw std::invalid_argument("cannot encode an empty token sequence");
  for (TokenId t : tokens)
    if (t < 0 || t >= params.vocab_size())
      throw std::out_of_range("token id " + std::to_string(t) + " outside vocabulary of size " +
                              std::to_string(params.vocab_size()));
}

// Pre-projection pooling state; alpha is the positional softmax in gated mode.
struct PoolState {
  Vec h;
  Vec alpha;
};

PoolState pool(const EncoderParams& params, const TokenSeq& tokens) {
  const Index len = static_cast<Index>(tokens.size());
  const Index d = params.dim();
  PoolState st;
  st.h = Vec::Zero(d);
  if (params.pooling == Pooling::kMean) {
    for (TokenId t : tokens) st.h += params.token_embeddings.row(t).transpose();
    st.h /= static_cast<Scalar>(len);
    return st;
  }
  Vec scores(len);
  for (Index i = 0; i < len; ++i)
    scores[i] = params.gate.dot(params.token_embeddings.row(tokens[static_cast<std::size_t>(i)]).transpose());
  const Scalar max_score = scores.maxCoeff();
  st.alpha = (scores.array() - max_score).exp();
  st.alpha /= st.alpha.sum();
  for (Index i = 0; i < len; ++i)
    st.h += st.alpha[i] * params.token_embeddings.row(tokens[static_cast<std::size_t>(i)]).transpose();
  return st;
}

}  // namespace

Vec encode(const EncoderParams& params, const TokenSeq& tokens) {
  check_tokens(params, tokens);
  return params.projection * pool(params, tokens).h;
}

Scalar similarity(const Vec& q, const Vec& p) {
  if (q.size() != p.size())
    throw std::invalid_argument("similarity: dimension mismatch " + std::to_string(q.size()) +
                                " vs " + std::to_string(p.size()));
  return q.dot(p);
}

Vec mean_embedding(const std::vector<Vec>& embeddings) {
  if (embeddings.empty()) throw std::invalid_argument("mean_embedding of an empty list");
  Vec sum = Vec::Zero(embeddings.front().size());
  for (const auto& v : embeddings) {
    if (v.size() != sum.size()) throw std::invalid_argument("mean_embedding: dimension mismatch");
    sum += v;
  }
  return sum / static_cast<Scalar>(embeddings.size());
}

Vec mean_embedding(const Mat& rows) {
  if (rows.rows() == 0) throw std::invalid_argument("mean_embedding of an empty matrix");
  Vec sum = Vec::Zero(rows.cols());
  for (Index i = 0; i < rows.rows(); ++i) sum += rows.row(i).transpose();
  return sum / static_cast<Scalar>(rows.rows());
}

Mat grad_context_dot(const EncoderParams& p_params, const Vec& context, const TokenSeq& passage) {
  check_tokens(p_params, passage);
  const Index len = static_cast<Index>(passage.size());
  const Index d = p_params.dim();
  const Vec w = p_params.projection.transpose() * context;
  Mat grads(len, d);
  if (p_params.pooling == Pooling::kMean) {
    const Vec row = w / static_cast<Scalar>(len);
    for (Index i = 0; i < len; ++i) grads.row(i) = row.transpose();
    return grads;
  }
  const PoolState st = pool(p_params, passage);
  Vec cvals(len);
  for (Index i = 0; i < len; ++i)
    cvals[i] = w.dot(p_params.token_embeddings.row(passage[static_cast<std::size_t>(i)]).transpose());
  const Scalar s = st.alpha.dot(cvals);
  for (Index i = 0; i < len; ++i)
    grads.row(i) = (st.alpha[i] * (w + (cvals[i] - s) * p_params.gate)).transpose();
  return grads;
}

Vec grad_context_dot_at(const EncoderParams& p_params, const Vec& context, const TokenSeq& passage,
                        Index position) {
  check_tokens(p_params, passage);
  if (position < 0 || position >= static_cast<Index>(passage.size()))
    throw std::out_of_range("gradient position out of range");
  const Vec w = p_params.projection.transpose() * context;
  if (p_params.pooling == Pooling::kMean) return w / static_cast<Scalar>(passage.size());
  const Index len = static_cast<Index>(passage.size());
  const PoolState st = pool(p_params, passage);
  Vec cvals(len);
  for (Index i = 0; i < len; ++i)
    cvals[i] = w.dot(p_params.token_embeddings.row(passage[static_cast<std::size_t>(i)]).transpose());
  const Scalar s = st.alpha.dot(cvals);
  return st.alpha[position] * (w + (cvals[position] - s) * p_params.gate);
}

Mat grad_sim_wrt_token_embeddings(const EncoderParams& q_params, const EncoderParams& p_params,
                                  const TokenSeq& query_tokens, const TokenSeq& passage_tokens) {
  return grad_context_dot(p_params, encode(q_params, query_tokens), passage_tokens);
}

EncoderParams random_encoder(Index vocab_size, Index dim, Pooling pooling, Rng& rng,
                             std::string model_id) {
  if (dim < 2) throw std::invalid_argument("encoder dim must be >= 2");
  if (vocab_size < 2) throw std::invalid_argument("encoder vocab_size must be >= 2");
  EncoderParams params;
  params.pooling = pooling;
  params.model_id = std::move(model_id);
  const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(dim));
  params.token_embeddings.resize(vocab_size, dim);
  for (Index i = 0; i < vocab_size; ++i)
    for (Index j = 0; j < dim; ++j) params.token_embeddings(i, j) = scale * rng.normal();
  params.gate.resize(dim);
  for (Index j = 0; j < dim; ++j) params.gate[j] = rng.normal();
  params.projection.resize(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) params.projection(i, j) = scale * rng.normal();
  return params;
}

EncoderPair random_encoder_pair(Index vocab_size, Index dim, Pooling pooling, bool tied,
                                std::uint64_t seed, const std::string& model_id) {
  EncoderPair pair;
  pair.tied = tied;
  Rng q_rng(mix_seed(seed, 0));
  pair.query = random_encoder(vocab_size, dim, pooling, q_rng, model_id);
  if (tied) {
    pair.passage = pair.query;
  } else {
    Rng p_rng(mix_seed(seed, 1));
    pair.passage = random_encoder(vocab_size, dim, pooling, p_rng, model_id);
  }
  return pair;
}

namespace {

struct Grads {
  Mat d_embeddings;
  Vec d_gate;
  Mat d_projection;

  explicit Grads(const EncoderParams& params)
      : d_embeddings(Mat::Zero(params.vocab_size(), params.dim())),
        d_gate(Vec::Zero(params.dim())),
        d_projection(Mat::Zero(params.dim(), params.dim())) {}
};

// Backprop of `delta` (gradient at the tower output) through projection and
// pooling into the parameter grads.
void backward(const EncoderParams& params, const TokenSeq& tokens, const PoolState& st,
              const Vec& delta, Grads& grads) {
  const Index len = static_cast<Index>(tokens.size());
  grads.d_projection += delta * st.h.transpose();
  const Vec dh = params.projection.transpose() * delta;
  if (params.pooling == Pooling::kMean) {
    const Vec row = dh / static_cast<Scalar>(len);
    for (Index i = 0; i < len; ++i)
      grads.d_embeddings.row(tokens[static_cast<std::size_t>(i)]) += row.transpose();
    return;
  }
  Vec dalpha(len);
  for (Index i = 0; i < len; ++i)
    dalpha[i] = dh.dot(params.token_embeddings.row(tokens[static_cast<std::size_t>(i)]).transpose());
  const Scalar mean_dalpha = st.alpha.dot(dalpha);
  for (Index i = 0; i < len; ++i) {
    const Scalar dscore = st.alpha[i] * (dalpha[i] - mean_dalpha);
    const Vec dv = st.alpha[i] * dh + dscore * params.gate;
    grads.d_embeddings.row(tokens[static_cast<std::size_t>(i)]) += dv.transpose();
    grads.d_gate += dscore * params.token_embeddings.row(tokens[static_cast<std::size_t>(i)]).transpose();
  }
}

void apply_sgd(EncoderParams& params, const Grads& grads, double lr) {
  params.token_embeddings -= lr * grads.d_embeddings;
  params.gate -= lr * grads.d_gate;
  params.projection -= lr * grads.d_projection;
}

}  // namespace

TrainTrace train_contrastive(EncoderPair& pair, const Qrels& qrels, const Corpus& corpus,
                             const QuerySet& queries, const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.batch_size < 2)
    throw std::invalid_argument("batch_size must be >= 2 (in-batch negatives need a negative)");

  std::unordered_map<std::string, std::size_t> doc_pos;
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) doc_pos[corpus.documents[i].id] = i;

  // Data prep: resolve each query's relevant documents up front.
  struct Example {
    std::size_t query_idx;
    std::vector<std::size_t> relevant;
  };
  std::vector<Example> examples;
  for (std::size_t qi = 0; qi < queries.queries.size(); ++qi) {
    const auto& query = queries.queries[qi];
    if (query.tokens.empty())
      throw std::invalid_argument("training query " + query.id + " has no tokens");
    auto it = qrels.relevant.find(query.id);
    if (it == qrels.relevant.end() || it->second.empty())
      throw std::invalid_argument("training query " + query.id + " has no relevant documents");
    Example ex;
    ex.query_idx = qi;
    for (const auto& doc_id : it->second) {
      auto pos = doc_pos.find(doc_id);
      if (pos == doc_pos.end())
        throw std::invalid_argument("qrels references unknown document id: " + doc_id);
      ex.relevant.push_back(pos->second);
    }
    examples.push_back(std::move(ex));
  }
  if (examples.empty()) throw std::invalid_argument("no training queries");

  Rng rng(cfg.seed);
  TrainTrace trace;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    double loss_sum = 0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const Index b = static_cast<Index>(stop - start);
      if (b < 2) continue;  // in-batch negatives need at least one negative

      std::vector<const TokenSeq*> q_tokens(static_cast<std::size_t>(b));
      std::vector<const TokenSeq*> p_tokens(static_cast<std::size_t>(b));
      for (Index i = 0; i < b; ++i) {
        const Example& ex = examples[order[start + static_cast<std::size_t>(i)]];
        q_tokens[static_cast<std::size_t>(i)] = &queries.queries[ex.query_idx].tokens;
        const std::size_t pick = ex.relevant[rng.uniform_int(ex.relevant.size())];
        p_tokens[static_cast<std::size_t>(i)] = &corpus.documents[pick].tokens;
      }

      // Forward.
      const Index d = pair.query.dim();
      Mat u(b, d), v(b, d);
      std::vector<PoolState> q_state(static_cast<std::size_t>(b)), p_state(static_cast<std::size_t>(b));
      for (Index i = 0; i < b; ++i) {
        check_tokens(pair.query, *q_tokens[static_cast<std::size_t>(i)]);
        check_tokens(pair.passage, *p_tokens[static_cast<std::size_t>(i)]);
        q_state[static_cast<std::size_t>(i)] = pool(pair.query, *q_tokens[static_cast<std::size_t>(i)]);
        p_state[static_cast<std::size_t>(i)] = pool(pair.passage, *p_tokens[static_cast<std::size_t>(i)]);
        u.row(i) = (pair.query.projection * q_state[static_cast<std::size_t>(i)].h).transpose();
        v.row(i) = (pair.passage.projection * p_state[static_cast<std::size_t>(i)].h).transpose();
      }
      const Mat scores = u * v.transpose();

      // Softmax cross-entropy per row; label is the diagonal.
      Mat g(b, b);
      double batch_loss = 0;
      for (Index i = 0; i < b; ++i) {
        const Scalar row_max = scores.row(i).maxCoeff();
        Eigen::RowVectorXd p = (scores.row(i).array() - row_max).exp();
        const Scalar z = p.sum();
        p /= z;
        batch_loss += -(scores(i, i) - row_max - std::log(z));
        g.row(i) = p;
        g(i, i) -= 1.0;
      }
      batch_loss /= static_cast<double>(b);
      g /= static_cast<Scalar>(b);

      const Mat du = g * v;
      const Mat dv = g.transpose() * u;

      Grads q_grads(pair.query), p_grads(pair.passage);
      for (Index i = 0; i < b; ++i) {
        backward(pair.query, *q_tokens[static_cast<std::size_t>(i)], q_state[static_cast<std::size_t>(i)],
                 du.row(i).transpose(), q_grads);
        backward(pair.passage, *p_tokens[static_cast<std::size_t>(i)], p_state[static_cast<std::size_t>(i)],
                 dv.row(i).transpose(), p_grads);
      }

      if (pair.tied) {
        q_grads.d_embeddings += p_grads.d_embeddings;
        q_grads.d_gate += p_grads.d_gate;
        q_grads.d_projection += p_grads.d_projection;
        apply_sgd(pair.query, q_grads, cfg.learning_rate);
        pair.passage = pair.query;
      } else {
        apply_sgd(pair.query, q_grads, cfg.learning_rate);
        apply_sgd(pair.passage, p_grads, cfg.learning_rate);
      }

      loss_sum += batch_loss;
      ++batches;
    }
    trace.epoch_loss.push_back(batches > 0 ? loss_sum / batches : 0.0);
  }
  return trace;
}

namespace {

nlohmann::json matrix_to_json(const Mat& m) {
  std::vector<Scalar> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return nlohmann::json(flat);
}

Mat matrix_from_json(const nlohmann::json& j, Index rows, Index cols) {
  const auto flat = j.get<std::vector<Scalar>>();
  if (static_cast<Index>(flat.size()) != rows * cols)
    throw std::runtime_error("checkpoint matrix has wrong element count");
  Mat m(rows, cols);
  std::size_t k = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index j2 = 0; j2 < cols; ++j2) m(i, j2) = flat[k++];
  return m;
}

nlohmann::json encoder_to_json(const EncoderParams& params) {
  nlohmann::json j;
  j["vocab_size"] = params.vocab_size();
  j["dim"] = params.dim();
  j["pooling"] = pooling_name(params.pooling);
  j["model_id"] = params.model_id;
  j["token_embeddings"] = matrix_to_json(params.token_embeddings);
  j["gate"] = matrix_to_json(params.gate);
  j["projection"] = matrix_to_json(params.projection);
  return j;
}

EncoderParams encoder_from_json(const nlohmann::json& j) {
  EncoderParams params;
  const Index vocab_size = j.at("vocab_size").get<Index>();
  const Index dim = j.at("dim").get<Index>();
  params.pooling = pooling_from_name(j.at("pooling").get<std::string>());
  params.model_id = j.at("model_id").get<std::string>();
  params.token_embeddings = matrix_from_json(j.at("token_embeddings"), vocab_size, dim);
  params.gate = matrix_from_json(j.at("gate"), dim, 1);
  params.projection = matrix_from_json(j.at("projection"), dim, dim);
  return params;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

void save_model(const std::string& path, const EncoderPair& pair) {
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["tied"] = pair.tied;
  j["model_id"] = pair.query.model_id;
  j["query_encoder"] = encoder_to_json(pair.query);
  j["passage_encoder"] = encoder_to_json(pair.passage);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump() << '\n';
}

EncoderPair load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model checkpoint " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error(path + ": not valid JSON");
  if (!j.contains("format_version") || j["format_version"].get<int>() != kCheckpointVersion)
    throw std::runtime_error(path + ": unsupported checkpoint format_version");
  EncoderPair pair;
  pair.tied = j.at("tied").get<bool>();
  pair.query = encoder_from_json(j.at("query_encoder"));
  pair.passage = encoder_from_json(j.at("passage_encoder"));
  return pair;
}

}  // namespace poison
