#include "poison/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "poison/rng.hpp"

namespace poison {

Vocabulary::Vocabulary() {
  add("[PAD]");
  add("[UNK]");
}

TokenId Vocabulary::add(const std::string& token) {
  auto [it, inserted] = ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
  if (!inserted) throw std::invalid_argument("duplicate vocabulary token: " + token);
  tokens_.push_back(token);
  return it->second;
}

TokenId Vocabulary::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(const std::string& token) const { return ids_.count(token) != 0; }

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(tokens_.size()));
  return tokens_[static_cast<std::size_t>(id)];
}

std::size_t Corpus::poisoned_count() const {
  std::size_t n = 0;
  for (auto flag : is_poisoned) n += flag;
  return n;
}

void Corpus::append(Document doc, bool poisoned) {
  auto [it, inserted] = id_index_.emplace(doc.id, documents.size());
  if (!inserted) throw std::invalid_argument("duplicate document id: " + doc.id);
  documents.push_back(std::move(doc));
  is_poisoned.push_back(poisoned ? 1 : 0);
  if (poisoned && poisoned_count() * 10 > documents.size())
    std::cerr << "warning: " << poisoned_count() << " injected passages exceed 10% of corpus size "
              << documents.size() << "\n";
}

const std::set<std::string>& Qrels::for_query(const std::string& query_id) const {
  auto it = relevant.find(query_id);
  if (it == relevant.end())
    throw std::out_of_range("no qrels entry for query id: " + query_id);
  return it->second;
}

namespace {

std::vector<std::string> split_lower(const std::string& text) {
  std::vector<std::string> words;
  std::string word;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!word.empty()) {
        words.push_back(std::move(word));
        word.clear();
      }
    } else {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!word.empty()) words.push_back(std::move(word));
  return words;
}

}  // namespace

Vocabulary build_vocab(const std::vector<std::string>& texts, Index max_size) {
  if (max_size < 2) throw std::invalid_argument("vocabulary max_size must be >= 2");
  std::map<std::string, std::int64_t> counts;  // ordered: gives the lexicographic tie-break
  for (const auto& text : texts)
    for (auto& word : split_lower(text)) ++counts[word];

  std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary vocab;
  const std::size_t capacity = static_cast<std::size_t>(max_size) - 2;
  for (std::size_t i = 0; i < ranked.size() && i < capacity; ++i) vocab.add(ranked[i].first);
  return vocab;
}

TokenSeq tokenize(const std::string& text, const Vocabulary& vocab) {
  TokenSeq out;
  for (const auto& word : split_lower(text)) out.push_back(vocab.id_of(word));
  return out;
}

std::string detokenize(const TokenSeq& tokens, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += vocab.token(tokens[i]);
  }
  return out;
}

void tokenize_documents(std::vector<Document>& docs, const Vocabulary& vocab) {
  for (auto& doc : docs) doc.tokens = tokenize(doc.text, vocab);
}

std::vector<Document> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Document> docs;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() || !record.contains("id") ||
        !record.contains("text") || !record["id"].is_string() || !record["text"].is_string())
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed record, expected {\"id\": string, \"text\": string}");
    Document doc;
    doc.id = record["id"].get<std::string>();
    doc.text = record["text"].get<std::string>();
    if (!seen.insert(doc.id).second)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": duplicate document id: " + doc.id);
    docs.push_back(std::move(doc));
  }
  return docs;
}

void save_jsonl(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& doc : docs) {
    nlohmann::json record{{"id", doc.id}, {"text", doc.text}};
    out << record.dump() << '\n';
  }
}

Qrels load_qrels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected query_id<TAB>doc_id");
    qrels.relevant[line.substr(0, tab)].insert(line.substr(tab + 1));
  }
  return qrels;
}

void save_qrels(const std::string& path, const Qrels& qrels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [query_id, doc_ids] : qrels.relevant)
    for (const auto& doc_id : doc_ids) out << query_id << '\t' << doc_id << '\n';
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  if (tokens.size() < 2 || tokens[0] != "[PAD]" || tokens[1] != "[UNK]")
    throw std::runtime_error(path + ": vocabulary must start with [PAD] and [UNK]");
  Vocabulary vocab;
  for (std::size_t i = 2; i < tokens.size(); ++i) vocab.add(tokens[i]);
  return vocab;
}

void save_vocab(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& token : vocab.tokens()) out << token << '\n';
}

namespace {

std::string padded_id(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%05d", prefix, n);
  return buf;
}

std::string sample_text(const std::vector<std::string>& core, const std::vector<std::string>& noise,
                        int min_len, int max_len, Rng& rng) {
  const int len = min_len + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_len - min_len + 1)));
  std::string text;
  for (int i = 0; i < len; ++i) {
    if (i > 0) text += ' ';
    const bool from_core = rng.uniform01() < 0.8;
    const auto& pool = from_core ? core : noise;
    text += pool[rng.uniform_int(pool.size())];
  }
  return text;
}

}  // namespace

SynthData synth_dataset(const SynthSpec& spec) {
  if (spec.n_topics < 1 || spec.docs_per_topic < 1 || spec.queries_per_topic < 1)
    throw std::invalid_argument("synth_dataset counts must all be >= 1");
  const Index allocatable = spec.vocab_size - 2;
  const Index noise_n = std::max<Index>(1, allocatable / 5);
  const Index core_total = allocatable - noise_n;
  if (core_total / spec.n_topics < 5)
    throw std::invalid_argument("vocab_size " + std::to_string(spec.vocab_size) +
                                " too small: each of " + std::to_string(spec.n_topics) +
                                " topics needs >= 5 core words");

  std::vector<std::string> noise;
  for (Index i = 0; i < noise_n; ++i) noise.push_back("n" + std::to_string(i));
  std::vector<std::vector<std::string>> core(static_cast<std::size_t>(spec.n_topics));
  for (int t = 0; t < spec.n_topics; ++t) {
    Index words = core_total / spec.n_topics + (t < core_total % spec.n_topics ? 1 : 0);
    for (Index i = 0; i < words; ++i)
      core[static_cast<std::size_t>(t)].push_back("t" + std::to_string(t) + "w" + std::to_string(i));
  }

  Rng rng(spec.seed);
  SynthData data;
  data.train.split = Split::kTrain;
  data.test.split = Split::kTest;

  int doc_counter = 0;
  int query_counter = 0;
  std::vector<std::vector<std::string>> topic_doc_ids(static_cast<std::size_t>(spec.n_topics));
  for (int t = 0; t < spec.n_topics; ++t) {
    const auto& topic_core = core[static_cast<std::size_t>(t)];
    for (int i = 0; i < spec.docs_per_topic; ++i) {
      Document doc;
      doc.id = padded_id("d", doc_counter++);
      doc.text = sample_text(topic_core, noise, 40, 60, rng);
      topic_doc_ids[static_cast<std::size_t>(t)].push_back(doc.id);
      data.corpus.append(std::move(doc), false);
    }

    const int q = spec.queries_per_topic;
    int n_train = static_cast<int>(std::llround(0.7 * q));
    if (q >= 2) n_train = std::clamp(n_train, 1, q - 1);
    for (int i = 0; i < q; ++i) {
      Document query;
      query.id = padded_id("q", query_counter++);
      query.text = sample_text(topic_core, noise, 5, 8, rng);
      for (const auto& doc_id : topic_doc_ids[static_cast<std::size_t>(t)])
        data.qrels.relevant[query.id].insert(doc_id);
      (i < n_train ? data.train : data.test).queries.push_back(std::move(query));
    }
  }

  std::vector<std::string> texts;
  for (const auto& doc : data.corpus.documents) texts.push_back(doc.text);
  for (const auto& query : data.train.queries) texts.push_back(query.text);
  for (const auto& query : data.test.queries) texts.push_back(query.text);
  data.vocab = build_vocab(texts, spec.vocab_size);

  tokenize_documents(data.corpus.documents, data.vocab);
  tokenize_documents(data.train.queries, data.vocab);
  tokenize_documents(data.test.queries, data.vocab);
  return data;
}

}  // namespace poison
