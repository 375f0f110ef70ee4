// Acceptance gate: one PASS/FAIL line per criterion, exit code = number of
// failures. Criteria 1-4 and 11 are exact property checks against independent
// oracles; criteria 5-10 and 12 run a shared desk-scale pipeline (10 topics,
// 2000 passages, |V|=1000, d=32 gated encoders) and gate on its outcomes.
// CSV artifacts land in ./acceptance_artifacts.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "poison/cluster.hpp"
#include "poison/corpus.hpp"
#include "poison/encoder.hpp"
#include "poison/eval.hpp"
#include "poison/experiment.hpp"
#include "poison/hotflip.hpp"
#include "poison/rng.hpp"
#include "oracles.hpp"

using namespace poison;

namespace {

const std::vector<std::uint64_t> kSeeds = {1999, 5, 27, 2016, 2024};
const char* kArtifacts = "acceptance_artifacts";

int g_failures = 0;

std::string fmt(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

template <typename Fn>
void run_criterion(int id, const char* label, Fn body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    pass = body(detail);
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("criterion %2d [%s]: %s  (%.1fs)  %s\n", id, label, pass ? "PASS" : "FAIL", secs,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TokenSeq random_tokens(Rng& rng, Index vocab, std::size_t len) {
  TokenSeq out(len);
  for (auto& t : out) {
    t = static_cast<TokenId>(2 + rng.uniform_int(static_cast<std::uint64_t>(vocab - 2)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Criteria 1-4: exact property checks on small random instances.

bool crit1_gradients(std::string& detail) {
  Rng rng(101);
  double worst = 0;
  for (const Pooling pooling : {Pooling::kMean, Pooling::kGated}) {
    for (int rep = 0; rep < 100; ++rep) {
      EncoderParams q_params = random_encoder(30, 6, pooling, rng);
      EncoderParams p_params = random_encoder(30, 6, pooling, rng);
      const TokenSeq query = random_tokens(rng, 30, 2 + rng.uniform_int(5));
      TokenSeq passage = random_tokens(rng, 30, 2 + rng.uniform_int(7));
      if (rep % 4 == 0) passage.assign(passage.size(), passage[0]);  // force repeats

      const Vec context = encode(q_params, query);
      const Mat analytic = grad_context_dot(p_params, context, passage);
      const oracle::ScalarModel m = oracle::from_params(p_params);
      std::vector<double> ctx(context.data(), context.data() + context.size());
      for (std::size_t pos = 0; pos < passage.size(); ++pos) {
        const std::vector<double> fd = oracle::fd_grad_at(m, ctx, passage, pos, 1e-5);
        for (std::size_t j = 0; j < fd.size(); ++j) {
          const double a = analytic(static_cast<Index>(pos), static_cast<Index>(j));
          const double err = std::abs(a - fd[j]) / std::max(std::abs(fd[j]), 1e-8);
          worst = std::max(worst, err);
        }
      }
    }
  }
  detail = "100 triples per pooling mode, worst relative error " + fmt(worst);
  return worst < 1e-5;
}

bool crit2_first_order(std::string& detail) {
  Rng rng(202);
  const Index vocab = 200;
  EncoderParams q_params = random_encoder(vocab, 16, Pooling::kMean, rng);
  EncoderParams p_params = random_encoder(vocab, 16, Pooling::kMean, rng);
  const TokenSeq query = random_tokens(rng, vocab, 5);
  const TokenSeq passage = random_tokens(rng, vocab, 20);
  const Vec context = encode(q_params, query);
  const Scalar base = similarity(context, encode(p_params, passage));

  double worst = 0;
  int swaps = 0;
  for (const std::size_t pos : {std::size_t{0}, std::size_t{9}, std::size_t{19}}) {
    const Vec grad = grad_context_dot_at(p_params, context, passage, static_cast<Index>(pos));
    const Scalar current = p_params.token_embeddings.row(passage[pos]).dot(grad);
    TokenSeq probe = passage;
    for (TokenId t = 0; t < static_cast<TokenId>(vocab); ++t) {
      probe[pos] = t;
      const Scalar predicted = p_params.token_embeddings.row(t).dot(grad) - current;
      const Scalar actual = similarity(context, encode(p_params, probe)) - base;
      worst = std::max(worst, static_cast<double>(std::abs(predicted - actual)));
      ++swaps;
    }
  }
  detail = std::to_string(swaps) + " swaps (|V|=200 at 3 positions), max abs error " + fmt(worst);
  return worst < 1e-9;
}

bool crit3_centroid_identity(std::string& detail) {
  Rng rng(303);
  const EncoderPair pair = random_encoder_pair(100, 12, Pooling::kGated, false, 21, "c3");
  double worst = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Index batch = 1 + (static_cast<Index>(rep) * 127) / 99;  // spans 1..128
    Mat rows(batch, 12);
    for (Index i = 0; i < batch; ++i) {
      rows.row(i) = encode(pair.query, random_tokens(rng, 100, 3 + rng.uniform_int(5))).transpose();
    }
    const TokenSeq passage = random_tokens(rng, 100, 15);
    const Scalar batch_obj = attack_objective(AttackTarget::batch(rows), passage, pair.passage);
    const Scalar centroid_obj =
        attack_objective(AttackTarget::centroid(mean_embedding(rows)), passage, pair.passage);
    worst = std::max(worst, static_cast<double>(std::abs(batch_obj - centroid_obj)));
  }
  detail = "100 batches of size 1-128, max abs gap " + fmt(worst);
  return worst < 1e-9;
}

// Exhaustive best swap at one position under the library objective, with the
// same accept rule as the step: strict improvement, ties to the lowest id.
struct BestSwap {
  TokenId token;
  Scalar objective;
  bool accepted;
};

BestSwap exhaustive_swap(const EncoderParams& p_params, const AttackTarget& target,
                         const TokenSeq& passage, std::size_t pos,
                         const std::set<TokenId>& banned) {
  BestSwap best{passage[pos], attack_objective(target, passage, p_params), false};
  TokenSeq probe = passage;
  for (TokenId t = 0; t < static_cast<TokenId>(p_params.vocab_size()); ++t) {
    if (banned.count(t)) continue;
    probe[pos] = t;
    const Scalar obj = attack_objective(target, probe, p_params);
    if (obj > best.objective) {
      best = {t, obj, true};
    } else if (best.accepted && obj == best.objective && t < best.token) {
      best.token = t;
    }
  }
  return best;
}

bool crit4_step_oracle(std::string& detail) {
  const Index vocab = 150;
  const EncoderPair pair = random_encoder_pair(vocab, 8, Pooling::kMean, false, 404, "c4");
  Rng meta(405);

  AttackConfig cfg;
  cfg.passage_len = 12;
  cfg.top_n = static_cast<int>(vocab) - 1;  // full allowed vocabulary ([PAD] banned)
  cfg.seed = 0;

  int full_matches = 0;
  int narrowed_hits = 0;
  const int steps = 200;
  TokenSeq passage;
  Vec center;
  for (int s = 0; s < steps; ++s) {
    if (s % 25 == 0) {
      Rng fresh(meta.next_u64());
      passage = random_tokens(fresh, vocab, 12);
      Mat rows(8, 8);
      for (Index i = 0; i < 8; ++i) {
        rows.row(i) = encode(pair.query, random_tokens(fresh, vocab, 4)).transpose();
      }
      center = mean_embedding(rows);
    }
    const AttackTarget target = AttackTarget::centroid(center);

    // The step draws its position first; a copied RNG recovers it.
    Rng step_rng(meta.next_u64());
    Rng probe_rng = step_rng;
    const std::size_t pos = static_cast<std::size_t>(probe_rng.uniform_int(passage.size()));
    const BestSwap best = exhaustive_swap(pair.passage, target, passage, pos, cfg.banned_tokens);

    cfg.top_n = static_cast<int>(vocab) - 1;
    Rng full_rng = step_rng;
    const StepResult full = hotflip_step(pair.passage, target, passage, cfg, full_rng);
    const TokenId full_tok = full.tokens[pos];
    if (full.accepted == best.accepted && full_tok == (best.accepted ? best.token : passage[pos]) &&
        full.objective == best.objective) {
      ++full_matches;
    }

    cfg.top_n = 100;
    Rng narrow_rng = step_rng;
    const StepResult narrow = hotflip_step(pair.passage, target, passage, cfg, narrow_rng);
    if (std::abs(narrow.objective - best.objective) <= 1e-12) ++narrowed_hits;

    passage = full.tokens;  // walk the search forward so steps see improving passages
  }
  const double hit_rate = 100.0 * narrowed_hits / steps;
  detail = "n=|V|: " + std::to_string(full_matches) + "/" + std::to_string(steps) +
           " exact matches; n=100 hit rate " + fmt(hit_rate) + "%";
  return full_matches == steps && hit_rate >= 90.0;
}

// ---------------------------------------------------------------------------
// Desk-scale pipeline shared by criteria 5-12.

struct Desk {
  SynthData data;
  EncoderPair model_a;  // attack + evaluation model
  EncoderPair model_b;  // transfer target trained with a different seed
  double precision_a = 0;
  RetrievalIndex clean_a;
  std::map<std::uint64_t, std::vector<AdversarialPassage>> attacks_a;  // criterion 5 passages
  std::vector<double> success5;
  std::vector<double> baseline5;
};

AttackConfig desk_attack_config(std::uint64_t seed) {
  AttackConfig cfg;
  cfg.passage_len = 50;
  cfg.max_iters = 500;
  cfg.top_n = 100;
  cfg.batch_size = 64;
  cfg.mode = AttackMode::kCentroid;
  cfg.seed = seed;
  cfg.threads = 1;
  return cfg;
}

EncoderPair train_desk_model(const SynthData& data, std::uint64_t seed, const std::string& id) {
  EncoderPair pair = random_encoder_pair(data.vocab.size(), 32, Pooling::kGated, false, seed, id);
  TrainConfig tcfg;
  tcfg.epochs = 30;
  tcfg.batch_size = 32;
  tcfg.learning_rate = 1.0;
  tcfg.seed = seed;
  train_contrastive(pair, data.qrels, data.corpus, data.train, tcfg);
  return pair;
}

Desk build_desk() {
  Desk desk;
  SynthSpec spec;
  spec.n_topics = 10;
  spec.docs_per_topic = 200;
  spec.queries_per_topic = 70;
  spec.vocab_size = 1000;
  spec.seed = 1999;
  desk.data = synth_dataset(spec);
  desk.model_a = train_desk_model(desk.data, 1999, "model-a");
  desk.model_b = train_desk_model(desk.data, 5, "model-b");
  desk.precision_a =
      retrieval_precision(desk.model_a, desk.data.corpus, desk.data.test, desk.data.qrels, 20);
  desk.clean_a = build_index(desk.model_a.passage, desk.data.corpus);
  return desk;
}

double poisoned_success(const Desk& desk, const std::vector<TokenSeq>& seqs, int k) {
  RetrievalIndex poisoned = desk.clean_a;
  inject_adversarial(poisoned, desk.model_a.passage, seqs);
  return attack_success_rate(poisoned, desk.model_a.query, desk.data.test, k).success_rate;
}

bool crit5_white_box(Desk& desk, std::string& detail) {
  for (const std::uint64_t seed : kSeeds) {
    const AttackConfig cfg = desk_attack_config(seed);
    desk.attacks_a[seed] =
        attack_corpus(desk.model_a, desk.data.train, desk.data.corpus, 10, cfg);
    desk.success5.push_back(poisoned_success(desk, passage_tokens(desk.attacks_a[seed]), 20));
    const auto random_seqs = random_token_passages(10, cfg.passage_len, cfg.banned_tokens,
                                                   desk.model_a.passage.vocab_size(), seed);
    desk.baseline5.push_back(poisoned_success(desk, random_seqs, 20));
  }
  const double med_success = median_of(desk.success5);
  const double med_baseline = median_of(desk.baseline5);
  detail = "median success " + fmt(med_success) + "% vs baseline " + fmt(med_baseline) +
           "% (margin " + fmt(med_success - med_baseline) + "pp; trainer precision@20 " +
           fmt(desk.precision_a) + ")";
  return med_success - med_baseline >= 50.0 && med_baseline <= 5.0;
}

bool crit6_efficiency(Desk& desk, std::string& detail) {
  AttackConfig cfg = desk_attack_config(1999);
  cfg.top_n = 10;  // keeps the candidate re-scoring from drowning the gradient cost
  cfg.max_iters = 500;

  cfg.mode = AttackMode::kCentroid;
  const TimedAttackResult cen =
      timed_attack(desk.model_a, desk.data.train, desk.data.corpus, 1, cfg);
  cfg.mode = AttackMode::kReproduced;
  const TimedAttackResult rep =
      timed_attack(desk.model_a, desk.data.train, desk.data.corpus, 1, cfg);

  const bool counters_exact = cen.timing.gradient_evals == cfg.max_iters &&
                              rep.timing.gradient_evals == 64 * cen.timing.gradient_evals;
  const double ratio = rep.timing.search_seconds / cen.timing.search_seconds;
  detail = "gradient evals " + std::to_string(rep.timing.gradient_evals) + " vs " +
           std::to_string(cen.timing.gradient_evals) + " (exactly 64x: " +
           (counters_exact ? "yes" : "NO") + "); search wall-clock ratio " + fmt(ratio) + "x";
  return counters_exact && ratio >= 5.0;
}

bool crit7_transfer(Desk& desk, std::string& detail) {
  std::vector<double> diag;
  std::vector<double> off;
  bool ordered = true;
  for (const std::uint64_t seed : kSeeds) {
    const AttackConfig cfg = desk_attack_config(seed);
    const auto advs_b = attack_corpus(desk.model_b, desk.data.train, desk.data.corpus, 10, cfg);
    const TransferMatrix m = transfer_eval(
        {{"model-a", passage_tokens(desk.attacks_a.at(seed))}, {"model-b", passage_tokens(advs_b)}},
        {desk.model_a, desk.model_b}, desk.data.corpus, desk.data.test, 20);
    // Row layout: sources x targets; diagonal entries are the white-box runs.
    for (int s = 0; s < 2; ++s) {
      const double white = m.rates(s, s);
      const double black = m.rates(s, 1 - s);
      diag.push_back(white);
      off.push_back(black);
      if (black > white) ordered = false;
    }
  }
  detail = "mean white-box " + fmt(mean_of(diag)) + "% vs transferred " + fmt(mean_of(off)) +
           "% (gap " + fmt(mean_of(diag) - mean_of(off)) + "pp over 5 seeds x 2 sources)";
  return ordered;
}

bool crit8_query_agnostic(Desk& desk, std::string& detail) {
  AttackConfig cfg = desk_attack_config(1999);
  cfg.mode = AttackMode::kCorpusCentroid;

  std::vector<MetricRow> rows;
  double success_at_half = -1;
  double baseline_at_half = -1;
  for (const double pct : {0.01, 0.05, 0.1, 0.5}) {
    const int num_adv = std::max<int>(
        1, static_cast<int>(std::llround(pct / 100.0 * static_cast<double>(desk.data.corpus.size()))));
    const auto advs = attack_corpus_query_agnostic(desk.model_a, desk.data.corpus, num_adv, cfg);
    const double success = poisoned_success(desk, passage_tokens(advs), 20);
    const double baseline = poisoned_success(
        desk, random_token_passages(num_adv, cfg.passage_len, cfg.banned_tokens,
                                    desk.model_a.passage.vocab_size(), cfg.seed),
        20);
    char label[32];
    std::snprintf(label, sizeof(label), "pct%g", pct);
    rows.push_back({"agnostic", cfg.seed, std::string("success_rate_") + label, success});
    rows.push_back({"agnostic", cfg.seed, std::string("baseline_success_rate_") + label, baseline});
    rows.push_back({"agnostic", cfg.seed, std::string("num_adv_") + label,
                    static_cast<double>(num_adv)});
    if (pct == 0.5) {
      success_at_half = success;
      baseline_at_half = baseline;
    }
  }
  const std::string csv = std::string(kArtifacts) + "/agnostic_sweep.csv";
  save_metrics_csv(csv, rows);
  detail = "0.5% poisoning: success " + fmt(success_at_half) + "% vs baseline " +
           fmt(baseline_at_half) + "%; sweep -> " + csv;
  return success_at_half > 0 && success_at_half >= 10.0 * baseline_at_half;
}

bool crit9_norms(Desk& desk, std::string& detail) {
  RetrievalIndex poisoned = desk.clean_a;
  inject_adversarial(poisoned, desk.model_a.passage, passage_tokens(desk.attacks_a.at(1999)));
  const NormReport report = norm_report(poisoned);
  const std::string csv = std::string(kArtifacts) + "/norm_histogram.csv";
  save_histogram_csv(csv, report);
  detail = "mean adversarial norm " + fmt(report.adversarial.mean) + " vs normal " +
           fmt(report.normal.mean) + "; histogram -> " + csv;
  return report.adversarial.mean > report.normal.mean;
}

bool crit10_imax_sweep(Desk& desk, std::string& detail) {
  // A single passage aimed at the global query centroid plateaus early, so the
  // sweep starts at one iteration to capture the rising part of the trade-off.
  const std::vector<int> checkpoints = {1, 5, 10, 25, 50, 100, 200, 500};
  std::map<int, std::vector<double>> success_at;
  std::vector<MetricRow> rows;
  for (const std::uint64_t seed : kSeeds) {
    AttackConfig cfg = desk_attack_config(seed);
    cfg.max_iters = checkpoints.back();
    const auto advs =
        attack_corpus(desk.model_a, desk.data.train, desk.data.corpus, 1, cfg, checkpoints);
    for (const int c : checkpoints) {
      std::vector<TokenSeq> at_c;
      for (const AdversarialPassage& adv : advs) at_c.push_back(adv.snapshots.at(c));
      const double success = poisoned_success(desk, at_c, 20);
      success_at[c].push_back(success);
      rows.push_back({"sweep-imax", seed, "success_rate_imax" + std::to_string(c), success});
    }
  }
  const std::string csv = std::string(kArtifacts) + "/imax_sweep.csv";
  save_metrics_csv(csv, rows);
  const double lo = median_of(success_at[checkpoints.front()]);
  const double hi = median_of(success_at[checkpoints.back()]);
  detail = "|A|=1 median success: I_max=" + std::to_string(checkpoints.front()) + " -> " +
           fmt(lo) + "%, I_max=" + std::to_string(checkpoints.back()) + " -> " + fmt(hi) +
           "%; trace -> " + csv;
  return hi >= lo;
}

bool crit11_metric_properties(Desk& desk, std::string& detail) {
  // Exact retrieval vs the brute-force full sort on random instances.
  Rng rng(2027);
  int oracle_matches = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const Index n = 20 + static_cast<Index>(rng.uniform_int(60));
    RetrievalIndex index;
    index.embeddings.resize(n, 6);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < 6; ++j) index.embeddings(i, j) = rng.normal();
      char buf[16];
      std::snprintf(buf, sizeof(buf), "p%05lld", static_cast<long long>(i));
      index.ids.push_back(buf);
      if (rng.uniform01() < 0.2) index.adversarial_ids.insert(buf);
    }
    Vec q(6);
    for (Index j = 0; j < 6; ++j) q[j] = rng.normal();
    const Vec scores = score_all(index, q);
    std::vector<double> sv(scores.data(), scores.data() + n);
    std::vector<char> adv;
    for (Index i = 0; i < n; ++i) adv.push_back(index.is_adversarial(i) ? 1 : 0);
    const auto order = oracle::full_sort_order(sv, adv, index.ids);
    const int k = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    const auto got = retrieve(index, q, k);
    bool same = got.size() == static_cast<std::size_t>(k);
    for (int i = 0; same && i < k; ++i) {
      same = got[static_cast<std::size_t>(i)].id == index.ids[order[static_cast<std::size_t>(i)]];
    }
    oracle_matches += same ? 1 : 0;
  }

  // Success-rate monotonicity in k and in nested adversarial sets, on the
  // criterion-5 poisoned index.
  RetrievalIndex poisoned = desk.clean_a;
  inject_adversarial(poisoned, desk.model_a.passage, passage_tokens(desk.attacks_a.at(1999)));
  bool monotone_k = true;
  double prev = -1;
  for (const int k : {1, 5, 20, 50, 100}) {
    const double s =
        attack_success_rate(poisoned, desk.model_a.query, desk.data.test, k).success_rate;
    if (s < prev) monotone_k = false;
    prev = s;
  }
  std::set<std::string> subset;
  for (const std::string& id : poisoned.adversarial_ids) {
    if (subset.size() < 5) subset.insert(id);
  }
  const double sub_rate =
      attack_success_rate(poisoned, desk.model_a.query, desk.data.test, 20, subset).success_rate;
  const double full_rate =
      attack_success_rate(poisoned, desk.model_a.query, desk.data.test, 20).success_rate;
  const bool nested = sub_rate <= full_rate;

  detail = "retrieve matches full sort on " + std::to_string(oracle_matches) +
           "/50 instances; monotone in k: " + (monotone_k ? "yes" : "NO") +
           "; nested |A| 5->10: " + fmt(sub_rate) + "% <= " + fmt(full_rate) + "%";
  return oracle_matches == 50 && monotone_k && nested;
}

bool crit12_determinism(Desk& desk, std::string& detail) {
  const std::string dir = kArtifacts;
  AttackConfig cfg = desk_attack_config(1999);

  const auto run1 = attack_corpus(desk.model_a, desk.data.train, desk.data.corpus, 10, cfg);
  const auto run2 = attack_corpus(desk.model_a, desk.data.train, desk.data.corpus, 10, cfg);
  cfg.threads = 4;
  const auto run4 = attack_corpus(desk.model_a, desk.data.train, desk.data.corpus, 10, cfg);

  save_adversarial_jsonl(dir + "/adv_rerun1.jsonl", run1, desk.data.vocab);
  save_adversarial_jsonl(dir + "/adv_rerun2.jsonl", run2, desk.data.vocab);
  save_adversarial_jsonl(dir + "/adv_threads4.jsonl", run4, desk.data.vocab);
  const std::string j1 = slurp(dir + "/adv_rerun1.jsonl");
  const bool jsonl_same =
      j1 == slurp(dir + "/adv_rerun2.jsonl") && j1 == slurp(dir + "/adv_threads4.jsonl");

  // CSV reports recomputed from each run, success evaluated with different
  // thread counts, must also be byte-identical.
  auto report_csvs = [&](const std::vector<AdversarialPassage>& advs, int threads,
                         const std::string& tag) {
    RetrievalIndex poisoned = build_index(desk.model_a.passage, desk.data.corpus, threads);
    inject_adversarial(poisoned, desk.model_a.passage, passage_tokens(advs));
    std::vector<MetricRow> rows;
    for (const int k : {5, 20}) {
      const SuccessReport rep =
          attack_success_rate(poisoned, desk.model_a.query, desk.data.test, k, threads, 1999);
      rows.push_back({"determinism", 1999, "success_rate_k" + std::to_string(k),
                      rep.success_rate});
    }
    save_metrics_csv(dir + "/metrics_" + tag + ".csv", rows);
    save_histogram_csv(dir + "/histogram_" + tag + ".csv", norm_report(poisoned));
  };
  report_csvs(run1, 1, "t1");
  report_csvs(run4, 4, "t4");
  const bool csv_same =
      slurp(dir + "/metrics_t1.csv") == slurp(dir + "/metrics_t4.csv") &&
      slurp(dir + "/histogram_t1.csv") == slurp(dir + "/histogram_t4.csv");

  detail = std::string("adversarial JSONL identical across rerun and threads 1/4: ") +
           (jsonl_same ? "yes" : "NO") + "; CSV reports identical: " + (csv_same ? "yes" : "NO");
  return jsonl_same && csv_same;
}

}  // namespace

int main() {
  std::filesystem::create_directories(kArtifacts);

  run_criterion(1, "gradient correctness", crit1_gradients);
  run_criterion(2, "first-order exactness", crit2_first_order);
  run_criterion(3, "centroid identity", crit3_centroid_identity);
  run_criterion(4, "step vs exhaustive swap", crit4_step_oracle);

  const auto t0 = std::chrono::steady_clock::now();
  Desk desk = build_desk();
  std::printf("setup: desk-scale dataset + two trained encoders (%.1fs, precision@20 %.3f)\n",
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
              desk.precision_a);
  std::fflush(stdout);

  run_criterion(5, "white-box attack", [&](std::string& d) { return crit5_white_box(desk, d); });
  run_criterion(6, "centroid efficiency", [&](std::string& d) { return crit6_efficiency(desk, d); });
  run_criterion(7, "transferability", [&](std::string& d) { return crit7_transfer(desk, d); });
  run_criterion(8, "query-agnostic", [&](std::string& d) { return crit8_query_agnostic(desk, d); });
  run_criterion(9, "embedding norms", [&](std::string& d) { return crit9_norms(desk, d); });
  run_criterion(10, "iteration sweep", [&](std::string& d) { return crit10_imax_sweep(desk, d); });
  run_criterion(11, "metric properties",
                [&](std::string& d) { return crit11_metric_properties(desk, d); });
  run_criterion(12, "determinism", [&](std::string& d) { return crit12_determinism(desk, d); });

  if (g_failures == 0) {
    std::printf("acceptance: all 12 criteria passed\n");
  } else {
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
  }
  return g_failures;
}
