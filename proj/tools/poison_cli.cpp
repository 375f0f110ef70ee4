// Experiment runner: every subcommand reads a flat key=value config file
// (--config) whose keys can be overridden by flags of the same name, writes
// artifacts under <out>/<name>/ and records a manifest per run.
// Exit codes: 0 success, 1 usage or config error, 2 runtime failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "poison/cluster.hpp"
#include "poison/corpus.hpp"
#include "poison/encoder.hpp"
#include "poison/eval.hpp"
#include "poison/experiment.hpp"
#include "poison/hotflip.hpp"

namespace {

using namespace poison;

const std::vector<std::uint64_t> kDefaultSeeds = {1999, 5, 27, 2016, 2024};

// One subcommand's key space: every key is both a config-file entry and a
// --key flag; flags win over the file.
struct SubConfig {
  CLI::App* cmd = nullptr;
  std::string config_path;
  std::map<std::string, std::string> raw;
  std::set<std::string> keys;

  void add_key(const std::string& key, const std::string& help) {
    keys.insert(key);
    cmd->add_option("--" + key, raw[key], help);
  }

  Config resolve() const {
    Config cfg;
    if (!config_path.empty()) {
      cfg = parse_config_file(config_path);
      validate_keys(cfg, keys);
    }
    for (const auto& [key, value] : raw) {
      if (cmd->count("--" + key) > 0) cfg[key] = value;
    }
    return cfg;
  }
};

SubConfig make_sub(CLI::App& app, const std::string& name, const std::string& desc) {
  SubConfig sub;
  sub.cmd = app.add_subcommand(name, desc);
  sub.cmd->add_option("--config", sub.config_path, "flat key=value config file");
  return sub;
}

std::string run_dir(const Config& cfg, const std::string& fallback_name, std::uint64_t seed,
                    bool per_seed = true) {
  const std::string out = get_string(cfg, "out", "out");
  const std::string name = get_string(cfg, "name", fallback_name);
  std::string dir = out + "/" + name;
  if (per_seed) dir += "/s" + std::to_string(seed);
  std::filesystem::create_directories(dir);
  return dir;
}

struct Dataset {
  Corpus corpus;
  QuerySet train;
  QuerySet test;
  Qrels qrels;
  Vocabulary vocab;
};

Dataset load_dataset(const std::string& dir) {
  if (dir.empty()) throw std::invalid_argument("config key data: dataset directory is required");
  Dataset d;
  d.vocab = load_vocab(dir + "/vocab.txt");
  std::vector<Document> docs = load_jsonl(dir + "/corpus.jsonl");
  tokenize_documents(docs, d.vocab);
  for (Document& doc : docs) d.corpus.append(std::move(doc), false);
  d.train.queries = load_jsonl(dir + "/train_queries.jsonl");
  d.train.split = Split::kTrain;
  tokenize_documents(d.train.queries, d.vocab);
  d.test.queries = load_jsonl(dir + "/test_queries.jsonl");
  d.test.split = Split::kTest;
  tokenize_documents(d.test.queries, d.vocab);
  d.qrels = load_qrels(dir + "/qrels.tsv");
  return d;
}

AttackConfig attack_config_from(const Config& cfg, std::uint64_t seed,
                                const std::string& default_mode) {
  AttackConfig acfg;
  acfg.passage_len = static_cast<Index>(get_int(cfg, "passage-len", 50));
  acfg.max_iters = static_cast<int>(get_int(cfg, "max-iters", 5000));
  acfg.top_n = static_cast<int>(get_int(cfg, "top-n", 100));
  acfg.batch_size = static_cast<int>(get_int(cfg, "batch-size", 64));
  acfg.mode = attack_mode_from_name(get_string(cfg, "mode", default_mode));
  acfg.seed = seed;
  acfg.threads = static_cast<int>(get_int(cfg, "threads", 1));
  return acfg;
}

void save_timing_csv(const std::string& path, const TimingReport& timing) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "phase,cluster_id,gradient_evals,objective_evals,seconds\n";
  char line[160];
  std::snprintf(line, sizeof(line), "prep,-1,0,0,%.6f\n", timing.prep_seconds);
  out << line;
  for (const PassageTiming& p : timing.per_passage) {
    std::snprintf(line, sizeof(line), "search,%d,%lld,%lld,%.6f\n", p.cluster_id,
                  static_cast<long long>(p.gradient_evals),
                  static_cast<long long>(p.objective_evals), p.search_seconds);
    out << line;
  }
  std::snprintf(line, sizeof(line), "search_total,-1,%lld,%lld,%.6f\n",
                static_cast<long long>(timing.gradient_evals),
                static_cast<long long>(timing.objective_evals), timing.search_seconds);
  out << line;
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::string trim_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

int run_synth(const Config& cfg) {
  SynthSpec spec;
  spec.n_topics = static_cast<int>(get_int(cfg, "topics", 10));
  spec.docs_per_topic = static_cast<int>(get_int(cfg, "docs-per-topic", 200));
  spec.queries_per_topic = static_cast<int>(get_int(cfg, "queries-per-topic", 70));
  spec.vocab_size = static_cast<Index>(get_int(cfg, "vocab-size", 1000));
  spec.seed = get_u64(cfg, "seed", kDefaultSeeds[0]);

  const std::string dir = run_dir(cfg, "synth", spec.seed);
  SynthData data = synth_dataset(spec);
  save_jsonl(dir + "/corpus.jsonl", data.corpus.documents);
  save_jsonl(dir + "/train_queries.jsonl", data.train.queries);
  save_jsonl(dir + "/test_queries.jsonl", data.test.queries);
  save_qrels(dir + "/qrels.tsv", data.qrels);
  save_vocab(dir + "/vocab.txt", data.vocab);
  write_manifest(dir + "/manifest.json", "synth", cfg, spec.seed);
  std::cout << "synth: " << data.corpus.size() << " passages, " << data.train.queries.size()
            << " train / " << data.test.queries.size() << " test queries -> " << dir << "\n";
  return 0;
}

int run_train(const Config& cfg) {
  const std::uint64_t seed = get_u64(cfg, "seed", kDefaultSeeds[0]);
  const std::string dir = run_dir(cfg, "train", seed);
  Dataset data = load_dataset(get_string(cfg, "data", ""));

  const Pooling pooling = pooling_from_name(get_string(cfg, "pooling", "gated"));
  const Index dim = static_cast<Index>(get_int(cfg, "dim", 32));
  const bool tied = get_bool(cfg, "tied", false);
  std::string model_id = get_string(cfg, "model-id", "");
  if (model_id.empty()) model_id = get_string(cfg, "name", "train") + "-s" + std::to_string(seed);

  EncoderPair pair = random_encoder_pair(data.vocab.size(), dim, pooling, tied, seed, model_id);
  TrainConfig tcfg;
  tcfg.epochs = static_cast<int>(get_int(cfg, "epochs", 30));
  tcfg.batch_size = static_cast<int>(get_int(cfg, "batch-size", 32));
  tcfg.learning_rate = get_double(cfg, "lr", 1.0);
  tcfg.seed = seed;
  const TrainTrace trace = train_contrastive(pair, data.qrels, data.corpus, data.train, tcfg);

  const int k = static_cast<int>(get_int(cfg, "k", 20));
  const int threads = static_cast<int>(get_int(cfg, "threads", 1));
  const double precision = retrieval_precision(pair, data.corpus, data.test, data.qrels, k,
                                               threads);

  save_model(dir + "/model.json", pair);
  std::vector<MetricRow> rows;
  const std::string name = get_string(cfg, "name", "train");
  for (std::size_t e = 0; e < trace.epoch_loss.size(); ++e) {
    rows.push_back({name, seed, "epoch_loss_" + std::to_string(e + 1), trace.epoch_loss[e]});
  }
  rows.push_back({name, seed, "precision_at_" + std::to_string(k) + "_test", precision});
  save_metrics_csv(dir + "/train_metrics.csv", rows);
  write_manifest(dir + "/manifest.json", "train", cfg, seed);
  std::cout << "train: final loss " << trace.epoch_loss.back() << ", test precision@" << k << " "
            << precision << " -> " << dir << "\n";
  return 0;
}

int run_attack(const Config& cfg) {
  const std::uint64_t seed = get_u64(cfg, "seed", kDefaultSeeds[0]);
  const std::string dir = run_dir(cfg, "attack", seed);
  Dataset data = load_dataset(get_string(cfg, "data", ""));
  const std::string model_path = get_string(cfg, "model", "");
  if (model_path.empty()) throw std::invalid_argument("config key model: model path is required");
  const EncoderPair models = load_model(model_path);

  const AttackConfig acfg = attack_config_from(cfg, seed, "centroid");
  const int num_adv = static_cast<int>(get_int(cfg, "num-adv", 10));
  const TimedAttackResult result = timed_attack(models, data.train, data.corpus, num_adv, acfg);

  save_adversarial_jsonl(dir + "/adv.jsonl", result.passages, data.vocab);
  save_timing_csv(dir + "/timing.csv", result.timing);
  write_manifest(dir + "/manifest.json", "attack", cfg, seed);
  std::cout << "attack: " << result.passages.size() << " passages, "
            << result.timing.gradient_evals << " gradient evals, prep "
            << result.timing.prep_seconds << "s, search " << result.timing.search_seconds
            << "s -> " << dir << "\n";
  return 0;
}

int run_eval(const Config& cfg) {
  const std::vector<std::uint64_t> seeds = get_u64_list(cfg, "seeds", kDefaultSeeds);
  const std::string dir = run_dir(cfg, "eval", seeds.front(), false);
  Dataset data = load_dataset(get_string(cfg, "data", ""));
  const std::string model_path = get_string(cfg, "model", "");
  if (model_path.empty()) throw std::invalid_argument("config key model: model path is required");
  const EncoderPair models = load_model(model_path);
  const std::string attack_dir = get_string(cfg, "attack", "");
  if (attack_dir.empty()) {
    throw std::invalid_argument("config key attack: attack artifact directory is required");
  }
  const std::vector<int> ks = get_int_list(cfg, "k", {20});
  const int threads = static_cast<int>(get_int(cfg, "threads", 1));
  const bool with_baseline = get_bool(cfg, "baseline", true);
  const std::string name = get_string(cfg, "name", "eval");

  const RetrievalIndex clean = build_index(models.passage, data.corpus, threads);
  std::vector<MetricRow> rows;
  std::map<int, std::vector<std::pair<std::uint64_t, double>>> by_k;
  for (const std::uint64_t seed : seeds) {
    const auto advs =
        load_adversarial_jsonl(attack_dir + "/s" + std::to_string(seed) + "/adv.jsonl");
    if (advs.empty()) throw std::runtime_error(attack_dir + ": empty adversarial set");
    RetrievalIndex poisoned = clean;
    inject_adversarial(poisoned, models.passage, passage_tokens(advs));
    RetrievalIndex baseline = clean;
    if (with_baseline) {
      inject_adversarial(baseline, models.passage,
                         random_token_passages(static_cast<int>(advs.size()),
                                               static_cast<Index>(advs.front().tokens.size()),
                                               {kPadId}, models.passage.vocab_size(), seed));
    }
    for (const int k : ks) {
      const SuccessReport rep =
          attack_success_rate(poisoned, models.query, data.test, k, threads, seed);
      rows.push_back({name, seed, "success_rate_k" + std::to_string(k), rep.success_rate});
      by_k[k].push_back({seed, rep.success_rate});
      if (with_baseline) {
        const SuccessReport base =
            attack_success_rate(baseline, models.query, data.test, k, threads, seed);
        rows.push_back(
            {name, seed, "baseline_success_rate_k" + std::to_string(k), base.success_rate});
      }
    }
  }
  save_metrics_csv(dir + "/metrics.csv", rows);
  write_manifest(dir + "/manifest.json", "eval", cfg, seeds.front());
  for (const auto& [k, by_seed] : by_k) {
    std::cout << format_success_table(by_seed, "success rate @ k=" + std::to_string(k));
  }
  std::cout << "eval -> " << dir << "\n";
  return 0;
}

int run_transfer(const Config& cfg) {
  const std::uint64_t seed = get_u64(cfg, "seed", kDefaultSeeds[0]);
  const std::string dir = run_dir(cfg, "transfer", seed);
  Dataset data = load_dataset(get_string(cfg, "data", ""));
  const std::string models_key = get_string(cfg, "models", "");
  if (models_key.empty()) {
    throw std::invalid_argument("config key models: comma-separated model paths are required");
  }
  std::vector<EncoderPair> models;
  {
    std::stringstream ss(models_key);
    std::string path;
    while (std::getline(ss, path, ',')) models.push_back(load_model(path));
  }
  if (models.size() < 2) {
    throw std::invalid_argument("transfer needs at least two models, got " +
                                std::to_string(models.size()));
  }

  const AttackConfig acfg = attack_config_from(cfg, seed, "centroid");
  const int num_adv = static_cast<int>(get_int(cfg, "num-adv", 10));
  const int k = static_cast<int>(get_int(cfg, "k", 20));
  const std::string name = get_string(cfg, "name", "transfer");

  std::vector<std::pair<std::string, std::vector<TokenSeq>>> adv_by_source;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto advs = attack_corpus(models[m], data.train, data.corpus, num_adv, acfg);
    std::string label = models[m].passage.model_id;
    if (label.empty()) label = "model" + std::to_string(m);
    save_adversarial_jsonl(dir + "/adv_" + label + ".jsonl", advs, data.vocab);
    adv_by_source.emplace_back(label, passage_tokens(advs));
  }
  const int threads = static_cast<int>(get_int(cfg, "threads", 1));
  const TransferMatrix matrix =
      transfer_eval(adv_by_source, models, data.corpus, data.test, k, threads);

  std::vector<MetricRow> rows;
  for (std::size_t s = 0; s < matrix.source_ids.size(); ++s) {
    for (std::size_t t = 0; t < matrix.target_ids.size(); ++t) {
      rows.push_back({name, seed,
                      "success_" + matrix.source_ids[s] + "_to_" + matrix.target_ids[t],
                      matrix.rates(static_cast<Index>(s), static_cast<Index>(t))});
    }
  }
  save_metrics_csv(dir + "/transfer.csv", rows);
  write_manifest(dir + "/manifest.json", "transfer", cfg, seed);
  std::cout << format_transfer_table(matrix) << "transfer -> " << dir << "\n";
  return 0;
}

int run_agnostic(const Config& cfg) {
  const std::uint64_t seed = get_u64(cfg, "seed", kDefaultSeeds[0]);
  const std::string dir = run_dir(cfg, "agnostic", seed);
  Dataset data = load_dataset(get_string(cfg, "data", ""));
  const std::string model_path = get_string(cfg, "model", "");
  if (model_path.empty()) throw std::invalid_argument("config key model: model path is required");
  const EncoderPair models = load_model(model_path);

  AttackConfig acfg = attack_config_from(cfg, seed, "corpus_centroid");
  if (acfg.mode != AttackMode::kCorpusCentroid) {
    throw std::invalid_argument("agnostic requires mode=corpus_centroid");
  }
  const std::vector<double> percents =
      get_double_list(cfg, "percent", {0.01, 0.05, 0.1, 0.5});
  const int k = static_cast<int>(get_int(cfg, "k", 20));
  const int threads = static_cast<int>(get_int(cfg, "threads", 1));
  const std::string name = get_string(cfg, "name", "agnostic");

  const RetrievalIndex clean = build_index(models.passage, data.corpus, threads);
  std::vector<MetricRow> rows;
  for (const double pct : percents) {
    if (pct <= 0 || pct > 100) throw std::invalid_argument("percent values must be in (0, 100]");
    const int num_adv = std::max<int>(
        1, static_cast<int>(std::llround(pct / 100.0 * static_cast<double>(data.corpus.size()))));
    const auto advs = attack_corpus_query_agnostic(models, data.corpus, num_adv, acfg);
    save_adversarial_jsonl(dir + "/adv_pct" + trim_number(pct) + ".jsonl", advs, data.vocab);

    RetrievalIndex poisoned = clean;
    inject_adversarial(poisoned, models.passage, passage_tokens(advs));
    const SuccessReport rep =
        attack_success_rate(poisoned, models.query, data.test, k, threads, seed);
    rows.push_back({name, seed, "success_rate_pct" + trim_number(pct), rep.success_rate});
    rows.push_back({name, seed, "num_adv_pct" + trim_number(pct), static_cast<double>(num_adv)});

    RetrievalIndex baseline = clean;
    inject_adversarial(baseline, models.passage,
                       random_token_passages(num_adv, acfg.passage_len, acfg.banned_tokens,
                                             models.passage.vocab_size(), seed));
    const SuccessReport base =
        attack_success_rate(baseline, models.query, data.test, k, threads, seed);
    rows.push_back({name, seed, "baseline_success_rate_pct" + trim_number(pct),
                    base.success_rate});
    std::cout << "pct " << pct << ": |A|=" << num_adv << " success " << rep.success_rate
              << "% baseline " << base.success_rate << "%\n";
  }
  save_metrics_csv(dir + "/sweep.csv", rows);
  write_manifest(dir + "/manifest.json", "agnostic", cfg, seed);
  std::cout << "agnostic -> " << dir << "\n";
  return 0;
}

int run_sweep_imax(const Config& cfg) {
  const std::vector<std::uint64_t> seeds = get_u64_list(cfg, "seeds", kDefaultSeeds);
  const std::string dir = run_dir(cfg, "sweep-imax", seeds.front(), false);
  Dataset data = load_dataset(get_string(cfg, "data", ""));
  const std::string model_path = get_string(cfg, "model", "");
  if (model_path.empty()) throw std::invalid_argument("config key model: model path is required");
  const EncoderPair models = load_model(model_path);

  std::vector<int> checkpoints = get_int_list(cfg, "checkpoints", {100, 500, 1000});
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  if (checkpoints.front() < 0) throw std::invalid_argument("checkpoints must be >= 0");

  const int num_adv = static_cast<int>(get_int(cfg, "num-adv", 1));
  const int k = static_cast<int>(get_int(cfg, "k", 20));
  const int threads = static_cast<int>(get_int(cfg, "threads", 1));
  const std::string name = get_string(cfg, "name", "sweep-imax");

  const RetrievalIndex clean = build_index(models.passage, data.corpus, threads);
  std::vector<MetricRow> rows;
  for (const std::uint64_t seed : seeds) {
    AttackConfig acfg = attack_config_from(cfg, seed, "centroid");
    // One run at the largest I_max; intermediate checkpoints reuse the
    // in-progress passage instead of restarting the search.
    acfg.max_iters = checkpoints.back();
    const auto advs = attack_corpus(models, data.train, data.corpus, num_adv, acfg, checkpoints);
    for (const int c : checkpoints) {
      std::vector<TokenSeq> at_c;
      for (const AdversarialPassage& adv : advs) at_c.push_back(adv.snapshots.at(c));
      RetrievalIndex poisoned = clean;
      inject_adversarial(poisoned, models.passage, at_c);
      const SuccessReport rep =
          attack_success_rate(poisoned, models.query, data.test, k, threads, seed);
      rows.push_back({name, seed, "success_rate_imax" + std::to_string(c), rep.success_rate});
    }
  }
  save_metrics_csv(dir + "/sweep.csv", rows);
  write_manifest(dir + "/manifest.json", "sweep-imax", cfg, seeds.front());
  std::cout << "sweep-imax: " << checkpoints.size() << " checkpoints x " << seeds.size()
            << " seeds -> " << dir << "\n";
  return 0;
}

int run_norms(const Config& cfg) {
  const std::uint64_t seed = get_u64(cfg, "seed", kDefaultSeeds[0]);
  const std::string dir = run_dir(cfg, "norms", seed);
  Dataset data = load_dataset(get_string(cfg, "data", ""));
  const std::string model_path = get_string(cfg, "model", "");
  if (model_path.empty()) throw std::invalid_argument("config key model: model path is required");
  const EncoderPair models = load_model(model_path);
  const std::string adv_path = get_string(cfg, "adv", "");
  if (adv_path.empty()) {
    throw std::invalid_argument("config key adv: adversarial JSONL path is required");
  }
  const int threads = static_cast<int>(get_int(cfg, "threads", 1));
  const std::string name = get_string(cfg, "name", "norms");

  const auto advs = load_adversarial_jsonl(adv_path);
  RetrievalIndex index = build_index(models.passage, data.corpus, threads);
  inject_adversarial(index, models.passage, passage_tokens(advs));
  const NormReport report = norm_report(index);

  std::vector<MetricRow> rows{
      {name, seed, "normal_norm_mean", report.normal.mean},
      {name, seed, "normal_norm_std", report.normal.stddev},
      {name, seed, "normal_norm_min", report.normal.min},
      {name, seed, "normal_norm_max", report.normal.max},
      {name, seed, "adv_norm_mean", report.adversarial.mean},
      {name, seed, "adv_norm_std", report.adversarial.stddev},
      {name, seed, "adv_norm_min", report.adversarial.min},
      {name, seed, "adv_norm_max", report.adversarial.max},
  };
  save_metrics_csv(dir + "/norms.csv", rows);
  save_histogram_csv(dir + "/histogram.csv", report);
  write_manifest(dir + "/manifest.json", "norms", cfg, seed);
  std::cout << "norms: normal mean " << report.normal.mean << ", adversarial mean "
            << report.adversarial.mean << " -> " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corpus poisoning attack pipeline for a toy dense retriever"};
  app.require_subcommand(1);

  SubConfig synth = make_sub(app, "synth", "generate a topic-structured synthetic dataset");
  synth.add_key("out", "output root directory");
  synth.add_key("name", "experiment name");
  synth.add_key("seed", "dataset seed");
  synth.add_key("topics", "number of topics");
  synth.add_key("docs-per-topic", "passages per topic");
  synth.add_key("queries-per-topic", "queries per topic (70/30 train/test split)");
  synth.add_key("vocab-size", "vocabulary size incl. [PAD]/[UNK]");

  SubConfig train = make_sub(app, "train", "train a bi-encoder on a synth dataset");
  train.add_key("out", "output root directory");
  train.add_key("name", "experiment name");
  train.add_key("seed", "init/shuffle seed");
  train.add_key("data", "synth artifact directory");
  train.add_key("pooling", "mean or gated");
  train.add_key("dim", "embedding dimension");
  train.add_key("tied", "tie query and passage towers");
  train.add_key("model-id", "checkpoint model id");
  train.add_key("epochs", "training epochs");
  train.add_key("batch-size", "contrastive batch size");
  train.add_key("lr", "SGD learning rate");
  train.add_key("k", "cutoff for the test precision report");
  train.add_key("threads", "worker threads");

  SubConfig attack = make_sub(app, "attack", "generate adversarial passages");
  attack.add_key("out", "output root directory");
  attack.add_key("name", "experiment name");
  attack.add_key("seed", "attack seed");
  attack.add_key("data", "synth artifact directory");
  attack.add_key("model", "trained model checkpoint");
  attack.add_key("mode", "reproduced, centroid or corpus_centroid");
  attack.add_key("num-adv", "number of adversarial passages");
  attack.add_key("passage-len", "adversarial passage length");
  attack.add_key("max-iters", "substitution iterations");
  attack.add_key("top-n", "candidate tokens per step");
  attack.add_key("batch-size", "query batch size");
  attack.add_key("threads", "worker threads");

  SubConfig eval = make_sub(app, "eval", "attack success rates across seeds");
  eval.add_key("out", "output root directory");
  eval.add_key("name", "experiment name");
  eval.add_key("seeds", "comma-separated attack seeds");
  eval.add_key("data", "synth artifact directory");
  eval.add_key("model", "evaluation model checkpoint");
  eval.add_key("attack", "attack output directory holding s<seed>/adv.jsonl");
  eval.add_key("k", "comma-separated top-k cutoffs");
  eval.add_key("baseline", "also report the random-injection baseline");
  eval.add_key("threads", "worker threads");

  SubConfig transfer = make_sub(app, "transfer", "cross-model transfer matrix");
  transfer.add_key("out", "output root directory");
  transfer.add_key("name", "experiment name");
  transfer.add_key("seed", "attack seed");
  transfer.add_key("data", "synth artifact directory");
  transfer.add_key("models", "comma-separated model checkpoints");
  transfer.add_key("mode", "attack mode");
  transfer.add_key("num-adv", "adversarial passages per source");
  transfer.add_key("passage-len", "adversarial passage length");
  transfer.add_key("max-iters", "substitution iterations");
  transfer.add_key("top-n", "candidate tokens per step");
  transfer.add_key("batch-size", "query batch size");
  transfer.add_key("k", "top-k cutoff");
  transfer.add_key("threads", "worker threads");

  SubConfig agnostic = make_sub(app, "agnostic", "query-agnostic corpus-centroid sweep");
  agnostic.add_key("out", "output root directory");
  agnostic.add_key("name", "experiment name");
  agnostic.add_key("seed", "attack seed");
  agnostic.add_key("data", "synth artifact directory");
  agnostic.add_key("model", "trained model checkpoint");
  agnostic.add_key("mode", "must stay corpus_centroid");
  agnostic.add_key("percent", "comma-separated |A| as percent of corpus");
  agnostic.add_key("passage-len", "adversarial passage length");
  agnostic.add_key("max-iters", "substitution iterations");
  agnostic.add_key("top-n", "candidate tokens per step");
  agnostic.add_key("batch-size", "clustered batch size");
  agnostic.add_key("k", "top-k cutoff");
  agnostic.add_key("threads", "worker threads");

  SubConfig sweep = make_sub(app, "sweep-imax", "success rate as iterations accumulate");
  sweep.add_key("out", "output root directory");
  sweep.add_key("name", "experiment name");
  sweep.add_key("seeds", "comma-separated attack seeds");
  sweep.add_key("data", "synth artifact directory");
  sweep.add_key("model", "trained model checkpoint");
  sweep.add_key("checkpoints", "comma-separated I_max checkpoints");
  sweep.add_key("mode", "attack mode");
  sweep.add_key("num-adv", "number of adversarial passages");
  sweep.add_key("passage-len", "adversarial passage length");
  sweep.add_key("top-n", "candidate tokens per step");
  sweep.add_key("batch-size", "query batch size");
  sweep.add_key("k", "top-k cutoff");
  sweep.add_key("threads", "worker threads");

  SubConfig norms = make_sub(app, "norms", "embedding-norm report for injected passages");
  norms.add_key("out", "output root directory");
  norms.add_key("name", "experiment name");
  norms.add_key("seed", "seed recorded in the report rows");
  norms.add_key("data", "synth artifact directory");
  norms.add_key("model", "model checkpoint");
  norms.add_key("adv", "adversarial JSONL to inject");
  norms.add_key("threads", "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth.cmd) return run_synth(synth.resolve());
    if (*train.cmd) return run_train(train.resolve());
    if (*attack.cmd) return run_attack(attack.resolve());
    if (*eval.cmd) return run_eval(eval.resolve());
    if (*transfer.cmd) return run_transfer(transfer.resolve());
    if (*agnostic.cmd) return run_agnostic(agnostic.resolve());
    if (*sweep.cmd) return run_sweep_imax(sweep.resolve());
    if (*norms.cmd) return run_norms(norms.resolve());
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
