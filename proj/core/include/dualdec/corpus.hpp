#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dualdec/lexicon.hpp"
#include "dualdec/text.hpp"

namespace dualdec {

/// Sentiment label attached to an instance. The integer values are the ones
/// written to instance files.
enum class Label : int { kPositive = 1, kNegative = -1 };

inline int to_int(Label l) { return static_cast<int>(l); }
/// Throws FormatError for anything but 1 and -1.
Label label_from_int(int v);

struct RawPair {
  Tokens post;
  Tokens response;
};

struct PostGroup {
  Tokens post;
  std::vector<Tokens> responses;
};

struct Triple {
  Tokens post;
  Tokens resp_pos;
  Tokens resp_neg;
  friend bool operator==(const Triple&, const Triple&) = default;
};

struct Instance {
  Tokens post;
  Tokens response;
  Label label = Label::kPositive;
  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Groups responses under identical posts. Groups come out in order of the
/// first appearance of their post; responses in order of first appearance
/// with exact duplicates dropped.
std::vector<PostGroup> group_by_post(const std::vector<RawPair>& pairs);

/// Every (positive, negative) response cross-pair of a post whose responses
/// both have strictly more than `min_len` tokens.
std::vector<Triple> mine_triples(const std::vector<PostGroup>& groups,
                                 const SentimentLexicon& lex, std::size_t min_len = 5);

/// Each triple becomes (post, resp_pos, +1) followed by (post, resp_neg, -1).
std::vector<Instance> rewrite_instances(const std::vector<Triple>& triples);

enum class SplitName { kTrain, kValid, kTest };
const char* to_string(SplitName s);

using SplitRatios = std::array<double, 3>;
inline constexpr SplitRatios kDefaultRatios = {0.8, 0.1, 0.1};

/// Target instance counts for train/valid/test: valid and test are rounded
/// shares of `n`, train takes the remainder.
std::array<std::size_t, 3> split_targets(std::size_t n, const SplitRatios& ratios);

struct SplitCorpus {
  std::vector<Instance> train;
  std::vector<Instance> valid;
  std::vector<Instance> test;
  /// Keyed by the space-joined post.
  std::map<std::string, SplitName> post_groups;

  const std::vector<Instance>& split(SplitName s) const;
};

/// Post-disjoint split. Distinct posts are shuffled with `seed` and dealt out
/// so that cumulative instance counts land closest to the targets; every
/// split receives at least one post. Throws InsufficientDataError when fewer
/// than three distinct posts exist and ConfigError on invalid ratios.
SplitCorpus strict_split(const std::vector<Instance>& instances,
                         const SplitRatios& ratios, std::uint64_t seed);

using TokenId = std::int32_t;

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kSos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kReserved = 4;
  static constexpr std::size_t kDefaultCap = 30000;

  static const std::array<Token, kReserved>& reserved_tokens();

  /// Top `cap` tokens by frequency (ties in byte order) after the reserved
  /// symbols.
  static Vocabulary build(const std::vector<Tokens>& sequences, std::size_t cap = kDefaultCap);

  /// Rebuilds from an index-ordered token list whose first four entries are
  /// the reserved symbols. Throws FormatError otherwise or on duplicates.
  static Vocabulary from_index_list(std::vector<Token> index_to_token);

  std::size_t size() const { return index_to_token_.size(); }
  TokenId index(const Token& t) const;
  bool contains(const Token& t) const;
  const Token& token(TokenId id) const;
  const std::vector<Token>& tokens() const { return index_to_token_; }

  /// Unknown tokens map to kUnk. No SOS/EOS is inserted.
  std::vector<TokenId> encode(const Tokens& tokens) const;
  Tokens decode(std::span<const TokenId> ids) const;

  /// In-vocabulary token occurrences over all occurrences.
  double coverage(const std::vector<Tokens>& sequences) const;

 private:
  std::vector<Token> index_to_token_;
  std::unordered_map<Token, TokenId> token_to_index_;
};

// File formats.

/// `post<TAB>response` per line, tokens space separated. Blank lines are
/// skipped; lines without a tab or with an empty side raise FormatError.
std::vector<RawPair> read_pairs_tsv(const std::filesystem::path& path);
std::string format_triples_tsv(const std::vector<Triple>& triples);
std::string format_instances_jsonl(const std::vector<Instance>& instances);
std::vector<Instance> parse_instances_jsonl(const std::string& text);
std::vector<Instance> read_instances_jsonl(const std::filesystem::path& path);
std::string format_vocab(const Vocabulary& vocab);
Vocabulary read_vocab(const std::filesystem::path& path);

}  // namespace dualdec
