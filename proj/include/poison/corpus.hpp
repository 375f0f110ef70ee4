#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "poison/types.hpp"

namespace poison {

/// Token string <-> dense id mapping. Ids 0 and 1 are reserved for [PAD] and
/// [UNK]; all other ids are assigned contiguously.
class Vocabulary {
 public:
  Vocabulary();

  /// Appends a token and returns its id. Throws on duplicates.
  TokenId add(const std::string& token);

  /// Id lookup; unknown tokens map to [UNK].
  TokenId id_of(const std::string& token) const;
  bool contains(const std::string& token) const;
  const std::string& token(TokenId id) const;
  Index size() const { return static_cast<Index>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

struct Document {
  std::string id;
  std::string text;
  TokenSeq tokens;
};

struct Corpus {
  std::vector<Document> documents;
  std::vector<std::uint8_t> is_poisoned;  // parallel to documents

  std::size_t size() const { return documents.size(); }
  std::size_t poisoned_count() const;

  /// Appends a document. Duplicate ids are a hard error; warns on stderr once
  /// injected passages exceed 10% of the corpus.
  void append(Document doc, bool poisoned);

 private:
  std::unordered_map<std::string, std::size_t> id_index_;
};

enum class Split { kTrain, kTest };

struct QuerySet {
  std::vector<Document> queries;
  Split split = Split::kTrain;
};

/// query id -> relevant document ids. Ordered containers keep iteration and
/// serialization deterministic.
struct Qrels {
  std::map<std::string, std::set<std::string>> relevant;

  const std::set<std::string>& for_query(const std::string& query_id) const;
};

/// Builds a vocabulary of [PAD], [UNK] plus the (max_size - 2) most frequent
/// lowercased whitespace tokens. Frequency ties break lexicographically.
Vocabulary build_vocab(const std::vector<std::string>& texts, Index max_size);

/// Lowercased whitespace split; out-of-vocabulary words map to [UNK].
TokenSeq tokenize(const std::string& text, const Vocabulary& vocab);

/// Space-joined token strings. Display form only; token ids are the ground
/// truth representation of a passage.
std::string detokenize(const TokenSeq& tokens, const Vocabulary& vocab);

void tokenize_documents(std::vector<Document>& docs, const Vocabulary& vocab);

/// JSONL with fields `id`, `text`, one object per line. Malformed lines and
/// duplicate ids raise errors naming the offending line.
std::vector<Document> load_jsonl(const std::string& path);
void save_jsonl(const std::string& path, const std::vector<Document>& docs);

/// Qrels TSV: `query_id<TAB>doc_id`, one pair per line.
Qrels load_qrels(const std::string& path);
void save_qrels(const std::string& path, const Qrels& qrels);

/// Vocabulary file: one token string per line, in id order.
Vocabulary load_vocab(const std::string& path);
void save_vocab(const std::string& path, const Vocabulary& vocab);

struct SynthSpec {
  int n_topics = 10;
  int docs_per_topic = 200;
  int queries_per_topic = 70;
  Index vocab_size = 1000;
  std::uint64_t seed = 0;
};

struct SynthData {
  Corpus corpus;
  QuerySet train;
  QuerySet test;
  Qrels qrels;
  Vocabulary vocab;
};

/// Generates a topic-structured dataset: each topic owns a disjoint core word
/// set, word draws are 80% core / 20% shared noise, queries of a topic are
/// relevant to every document of that topic, and queries split 70/30 into
/// train/test. Fully determined by the seed.
SynthData synth_dataset(const SynthSpec& spec);

}  // namespace poison
