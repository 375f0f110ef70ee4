#include "poison/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "poison/experiment.hpp"

namespace poison {

namespace {

// Runs fn(i) for i in [0, n); each index is written independently, so results
// do not depend on the worker count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const int workers = std::min<int>(std::max(threads, 1), static_cast<int>(n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
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
}

std::string padded(const std::string& prefix, std::size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05zu", n);
  return prefix + buf;
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void check_csv_field(const std::string& s) {
  if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos) {
    throw std::invalid_argument("CSV field may not contain commas or newlines: " + s);
  }
}

NormReport::Stats summarize(const std::vector<double>& xs) {
  NormReport::Stats s;
  s.mean = mean_of(xs);
  s.stddev = stddev_of(xs);
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  return s;
}

}  // namespace

bool RetrievalIndex::is_adversarial(Index row) const {
  return adversarial_ids.count(ids[static_cast<std::size_t>(row)]) > 0;
}

std::vector<TokenSeq> passage_tokens(const std::vector<AdversarialPassage>& passages) {
  std::vector<TokenSeq> out;
  out.reserve(passages.size());
  for (const AdversarialPassage& adv : passages) out.push_back(adv.tokens);
  return out;
}

RetrievalIndex build_index(const EncoderParams& params, const Corpus& corpus, int threads) {
  if (corpus.size() == 0) throw std::invalid_argument("corpus is empty");
  RetrievalIndex index;
  index.model_id = params.model_id;
  index.ids.reserve(corpus.size());
  for (const Document& doc : corpus.documents) index.ids.push_back(doc.id);
  index.embeddings.resize(static_cast<Index>(corpus.size()), params.dim());
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    index.embeddings.row(static_cast<Index>(i)) =
        encode(params, corpus.documents[i].tokens).transpose();
  });
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus.is_poisoned[i]) index.adversarial_ids.insert(corpus.documents[i].id);
  }
  return index;
}

void inject_adversarial(RetrievalIndex& index, const EncoderParams& params,
                        const std::vector<TokenSeq>& passages, const std::string& prefix) {
  if (passages.empty()) return;
  const std::set<std::string> existing(index.ids.begin(), index.ids.end());
  const Index base = index.embeddings.rows();
  index.embeddings.conservativeResize(base + static_cast<Index>(passages.size()), Eigen::NoChange);
  std::size_t serial = index.adversarial_ids.size();
  for (std::size_t i = 0; i < passages.size(); ++i) {
    const std::string id = padded(prefix, serial++);
    if (existing.count(id)) throw std::invalid_argument("adversarial id collides: " + id);
    index.ids.push_back(id);
    index.adversarial_ids.insert(id);
    index.embeddings.row(base + static_cast<Index>(i)) =
        encode(params, passages[i]).transpose();
  }
}

Vec score_all(const RetrievalIndex& index, const Vec& query_emb) {
  if (query_emb.size() != index.embeddings.cols()) {
    throw std::invalid_argument("query dimension does not match index");
  }
  return index.embeddings * query_emb;
}

std::vector<RetrievedItem> retrieve(const RetrievalIndex& index, const Vec& query_emb, int k) {
  const Index n = index.size();
  if (k < 1 || static_cast<Index>(k) > n) throw std::invalid_argument("k out of range");
  const Vec scores = score_all(index, query_emb);
  std::vector<char> adv(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) adv[static_cast<std::size_t>(i)] = index.is_adversarial(i);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto before = [&](Index a, Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    const auto sa = static_cast<std::size_t>(a);
    const auto sb = static_cast<std::size_t>(b);
    if (adv[sa] != adv[sb]) return adv[sa] < adv[sb];
    return index.ids[sa] < index.ids[sb];
  };
  std::partial_sort(order.begin(), order.begin() + k, order.end(), before);

  std::vector<RetrievedItem> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const auto idx = static_cast<std::size_t>(order[static_cast<std::size_t>(i)]);
    out.push_back({index.ids[idx], scores[order[static_cast<std::size_t>(i)]],
                   adv[idx] != 0});
  }
  return out;
}

SuccessReport attack_success_rate(const RetrievalIndex& index, const EncoderParams& q_params,
                                  const QuerySet& queries, int k,
                                  const std::set<std::string>& adv_ids, int threads,
                                  std::uint64_t seed) {
  if (queries.queries.empty()) throw std::invalid_argument("query set is empty");
  const std::set<std::string> all_ids(index.ids.begin(), index.ids.end());
  for (const std::string& id : adv_ids) {
    if (!all_ids.count(id)) throw std::invalid_argument("unknown adversarial id: " + id);
  }
  SuccessReport report;
  report.k = k;
  report.num_adv = static_cast<int>(adv_ids.size());
  report.seed = seed;
  report.hits.assign(queries.queries.size(), 0);
  parallel_for(queries.queries.size(), threads, [&](std::size_t i) {
    const Vec emb = encode(q_params, queries.queries[i].tokens);
    for (const RetrievedItem& item : retrieve(index, emb, k)) {
      if (adv_ids.count(item.id)) {
        report.hits[i] = 1;
        break;
      }
    }
  });
  std::size_t hit_count = 0;
  for (char h : report.hits) hit_count += h ? 1 : 0;
  report.success_rate =
      100.0 * static_cast<double>(hit_count) / static_cast<double>(report.hits.size());
  return report;
}

SuccessReport attack_success_rate(const RetrievalIndex& index, const EncoderParams& q_params,
                                  const QuerySet& queries, int k, int threads,
                                  std::uint64_t seed) {
  return attack_success_rate(index, q_params, queries, k, index.adversarial_ids, threads, seed);
}

TransferMatrix transfer_eval(
    const std::vector<std::pair<std::string, std::vector<TokenSeq>>>& adv_by_source,
    const std::vector<EncoderPair>& targets, const Corpus& corpus, const QuerySet& test_queries,
    int k, int threads) {
  if (adv_by_source.empty()) throw std::invalid_argument("no source passage sets");
  if (targets.empty()) throw std::invalid_argument("no target models");
  const Index vocab = targets.front().passage.vocab_size();
  for (const EncoderPair& t : targets) {
    if (t.passage.vocab_size() != vocab || t.query.vocab_size() != vocab) {
      throw std::invalid_argument("target models do not share a vocabulary");
    }
  }
  for (const auto& [source_id, seqs] : adv_by_source) {
    for (const TokenSeq& seq : seqs) {
      for (TokenId t : seq) {
        if (t < 0 || t >= static_cast<TokenId>(vocab)) {
          throw std::invalid_argument("passage from " + source_id +
                                      " uses tokens outside the shared vocabulary");
        }
      }
    }
  }

  TransferMatrix matrix;
  for (const auto& [source_id, seqs] : adv_by_source) {
    (void)seqs;
    matrix.source_ids.push_back(source_id);
  }
  for (const EncoderPair& t : targets) matrix.target_ids.push_back(t.passage.model_id);
  matrix.rates.resize(static_cast<Index>(adv_by_source.size()), static_cast<Index>(targets.size()));

  for (std::size_t t = 0; t < targets.size(); ++t) {
    const RetrievalIndex clean = build_index(targets[t].passage, corpus, threads);
    for (std::size_t s = 0; s < adv_by_source.size(); ++s) {
      RetrievalIndex poisoned = clean;
      inject_adversarial(poisoned, targets[t].passage, adv_by_source[s].second);
      const SuccessReport report =
          attack_success_rate(poisoned, targets[t].query, test_queries, k, threads);
      matrix.rates(static_cast<Index>(s), static_cast<Index>(t)) = report.success_rate;
    }
  }
  return matrix;
}

NormReport norm_report(const RetrievalIndex& index) {
  std::vector<double> normal;
  std::vector<double> adv;
  for (Index i = 0; i < index.size(); ++i) {
    const double norm = index.embeddings.row(i).norm();
    (index.is_adversarial(i) ? adv : normal).push_back(norm);
  }
  if (normal.empty() || adv.empty()) {
    throw std::invalid_argument("norm report needs at least one normal and one adversarial row");
  }

  NormReport report;
  report.normal = summarize(normal);
  report.adversarial = summarize(adv);

  const double lo = std::min(report.normal.min, report.adversarial.min);
  const double hi = std::max(report.normal.max, report.adversarial.max);
  const int nbins = 20;
  const double width = (hi - lo) / nbins;
  report.bins.resize(nbins);
  for (int b = 0; b < nbins; ++b) {
    report.bins[static_cast<std::size_t>(b)].low = lo + width * b;
    report.bins[static_cast<std::size_t>(b)].high = (b == nbins - 1) ? hi : lo + width * (b + 1);
  }
  auto bin_of = [&](double x) {
    if (width <= 0) return 0;
    const int b = static_cast<int>((x - lo) / width);
    return std::clamp(b, 0, nbins - 1);
  };
  for (double x : normal) ++report.bins[static_cast<std::size_t>(bin_of(x))].count_normal;
  for (double x : adv) ++report.bins[static_cast<std::size_t>(bin_of(x))].count_adv;
  return report;
}

TimedAttackResult timed_attack(const EncoderPair& models, const QuerySet& train_queries,
                               const Corpus& corpus, int num_adv, const AttackConfig& cfg,
                               const std::vector<int>& snapshot_iters) {
  TimedAttackResult result;
  const auto t0 = std::chrono::steady_clock::now();
  const AttackPlan plan = cfg.mode == AttackMode::kCorpusCentroid
                              ? prepare_corpus_attack(models, corpus, num_adv, cfg)
                              : prepare_query_attack(models, train_queries, num_adv, cfg);
  const auto t1 = std::chrono::steady_clock::now();
  result.timing.prep_seconds = std::chrono::duration<double>(t1 - t0).count();

  result.passages = run_attack(models.passage, plan, corpus, cfg, snapshot_iters);
  for (const AdversarialPassage& adv : result.passages) {
    result.timing.search_seconds += adv.search_seconds;
    result.timing.gradient_evals += adv.gradient_evals;
    result.timing.objective_evals += adv.objective_evals;
    result.timing.per_passage.push_back(
        {adv.cluster_id, adv.search_seconds, adv.gradient_evals, adv.objective_evals});
  }
  return result;
}

double retrieval_precision(const EncoderPair& models, const Corpus& corpus,
                           const QuerySet& queries, const Qrels& qrels, int k, int threads) {
  if (queries.queries.empty()) throw std::invalid_argument("query set is empty");
  const RetrievalIndex index = build_index(models.passage, corpus, threads);
  std::vector<double> precision(queries.queries.size(), 0.0);
  parallel_for(queries.queries.size(), threads, [&](std::size_t i) {
    const Document& q = queries.queries[i];
    const std::set<std::string>& relevant = qrels.for_query(q.id);
    int found = 0;
    for (const RetrievedItem& item : retrieve(index, encode(models.query, q.tokens), k)) {
      if (relevant.count(item.id)) ++found;
    }
    precision[i] = static_cast<double>(found) / static_cast<double>(k);
  });
  return mean_of(precision);
}

void save_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "experiment,seed,metric,value\n";
  for (const MetricRow& row : rows) {
    check_csv_field(row.experiment);
    check_csv_field(row.metric);
    out << row.experiment << "," << row.seed << "," << row.metric << ","
        << fmt_double(row.value) << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

void save_histogram_csv(const std::string& path, const NormReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "bin_low,bin_high,count_normal,count_adv\n";
  for (const NormReport::Bin& bin : report.bins) {
    out << fmt_double(bin.low) << "," << fmt_double(bin.high) << "," << bin.count_normal << ","
        << bin.count_adv << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::string format_success_table(const std::vector<std::pair<std::uint64_t, double>>& by_seed,
                                 const std::string& metric) {
  std::string out = metric + "\n";
  std::vector<double> values;
  for (const auto& [seed, value] : by_seed) {
    char line[96];
    std::snprintf(line, sizeof(line), "  seed %-6llu %8.2f\n",
                  static_cast<unsigned long long>(seed), value);
    out += line;
    values.push_back(value);
  }
  if (!values.empty()) {
    char line[96];
    std::snprintf(line, sizeof(line), "  mean %.2f (%.2f)\n", mean_of(values),
                  stddev_of(values));
    out += line;
  }
  return out;
}

std::string format_transfer_table(const TransferMatrix& matrix) {
  std::string out = "source \\ target";
  for (const std::string& t : matrix.target_ids) out += "  " + t;
  out += "\n";
  for (std::size_t s = 0; s < matrix.source_ids.size(); ++s) {
    out += matrix.source_ids[s];
    for (std::size_t t = 0; t < matrix.target_ids.size(); ++t) {
      char cell[32];
      std::snprintf(cell, sizeof(cell), "  %8.2f",
                    matrix.rates(static_cast<Index>(s), static_cast<Index>(t)));
      out += cell;
    }
    out += "\n";
  }
  return out;
}

}  // namespace poison
