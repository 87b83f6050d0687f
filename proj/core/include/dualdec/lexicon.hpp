#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "dualdec/text.hpp"

namespace dualdec {

enum class Polarity { kNegative = -1, kNeutral = 0, kPositive = 1 };

const char* to_string(Polarity p);

/// Sentence score: occurrences of positive-lexicon tokens minus occurrences of
/// negative-lexicon tokens. The polarity is the sign of the score.
struct SentimentScore {
  int score = 0;
  Polarity polarity = Polarity::kNeutral;

  static SentimentScore from_score(int score);
  friend bool operator==(const SentimentScore&, const SentimentScore&) = default;
};

/// Two disjoint word sets. Immutable once built; safe to share between threads.
class SentimentLexicon {
 public:
  /// Builds a lexicon from in-memory word lists. Words are trimmed and
  /// deduplicated, `stopwords` are removed from both sides. Throws
  /// OverlapError when a word is listed on both sides and EmptyLexiconError
  /// when either side ends up empty.
  static SentimentLexicon from_words(const std::vector<std::string>& positive,
                                     const std::vector<std::string>& negative,
                                     const std::vector<std::string>& stopwords = {});

  const std::set<Token>& positive() const { return positive_; }
  const std::set<Token>& negative() const { return negative_; }
  /// Stopwords that were actually present in a raw list and got dropped.
  const std::set<Token>& removed_stopwords() const { return removed_; }

  bool is_positive(const Token& t) const { return positive_.count(t) != 0; }
  bool is_negative(const Token& t) const { return negative_.count(t) != 0; }

  /// The same lexicon with its two sides exchanged.
  SentimentLexicon swapped() const;

 private:
  std::set<Token> positive_;
  std::set<Token> negative_;
  std::set<Token> removed_;
};

/// Reads one-token-per-line word list files. Lines are trimmed; blank lines
/// and lines starting with '#' are skipped.
std::vector<std::string> read_word_list(const std::filesystem::path& path);

SentimentLexicon load_lexicon(const std::filesystem::path& positive_path,
                              const std::filesystem::path& negative_path,
                              const std::vector<std::string>& stopwords = {});

SentimentScore score_sentence(const Tokens& tokens, const SentimentLexicon& lex);

}  // namespace dualdec
