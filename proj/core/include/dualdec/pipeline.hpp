#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dualdec/corpus.hpp"
#include "dualdec/lexicon.hpp"
#include "dualdec/train.hpp"

namespace dualdec {

struct CorpusStats {
  std::size_t pairs = 0;
  std::size_t triples = 0;
  std::size_t posts = 0;  // distinct posts with at least one triple
  double triples_per_post = 0.0;
  std::size_t instances = 0;
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
  std::size_t post_vocab_size = 0;
  std::size_t resp_vocab_size = 0;
  double post_vocab_coverage = 0.0;  // over all instance posts
  double resp_vocab_coverage = 0.0;  // over all instance responses
};

struct BuiltCorpus {
  std::vector<Triple> triples;
  std::vector<Instance> instances;
  SplitCorpus split;
  Vocabulary post_vocab;
  Vocabulary resp_vocab;
  CorpusStats stats;
};

struct CorpusOptions {
  std::size_t min_len = 5;
  SplitRatios ratios = kDefaultRatios;
  std::uint64_t seed = 1;
  std::size_t vocab_cap = Vocabulary::kDefaultCap;
};

/// group -> mine -> rewrite -> strict split -> vocabularies (built from the
/// training split, post side and response side separately).
BuiltCorpus build_corpus(const std::vector<RawPair>& pairs, const SentimentLexicon& lex,
                         const CorpusOptions& options);

/// Writes triples.tsv, instances.jsonl, train/valid/test.jsonl, post.vocab,
/// resp.vocab and stats.json into `dir` (created if needed).
void write_corpus_dir(const std::filesystem::path& dir, const BuiltCorpus& corpus);

std::string stats_to_json(const CorpusStats& stats);

/// The pieces of a corpus directory the later stages read back.
struct CorpusDir {
  SplitCorpus split;
  Vocabulary post_vocab;
  Vocabulary resp_vocab;
};

/// IoError when the directory or one of its files is missing.
CorpusDir load_corpus_dir(const std::filesystem::path& dir);

EncodedCorpus encode_corpus(const CorpusDir& corpus, std::size_t max_src_len, std::size_t max_tgt_len);

}  // namespace dualdec
