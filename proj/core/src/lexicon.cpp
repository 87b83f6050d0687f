#include "dualdec/lexicon.hpp"

#include "dualdec/errors.hpp"

namespace dualdec {

const char* to_string(Polarity p) {
  switch (p) {
    case Polarity::kPositive: return "positive";
    case Polarity::kNegative: return "negative";
    case Polarity::kNeutral: return "neutral";
  }
  return "neutral";
}

SentimentScore SentimentScore::from_score(int score) {
  SentimentScore s;
  s.score = score;
  s.polarity = score > 0 ? Polarity::kPositive
             : score < 0 ? Polarity::kNegative
                         : Polarity::kNeutral;
  return s;
}

namespace {

std::set<Token> clean(const std::vector<std::string>& words) {
  std::set<Token> out;
  for (const auto& w : words) {
    auto t = trim(w);
    if (!t.empty()) out.emplace(t);
  }
  return out;
}

}  // namespace

SentimentLexicon SentimentLexicon::from_words(const std::vector<std::string>& positive,
                                              const std::vector<std::string>& negative,
                                              const std::vector<std::string>& stopwords) {
  SentimentLexicon lex;
  lex.positive_ = clean(positive);
  lex.negative_ = clean(negative);

  for (const auto& w : lex.positive_) {
    if (lex.negative_.count(w)) throw OverlapError("token '" + w + "' is listed as both positive and negative");
  }

  for (const auto& s : clean(stopwords)) {
    if (lex.positive_.erase(s) + lex.negative_.erase(s) > 0) lex.removed_.insert(s);
  }

  if (lex.positive_.empty()) throw EmptyLexiconError("positive lexicon is empty after filtering");
  if (lex.negative_.empty()) throw EmptyLexiconError("negative lexicon is empty after filtering");
  return lex;
}

SentimentLexicon SentimentLexicon::swapped() const {
  SentimentLexicon out = *this;
  std::swap(out.positive_, out.negative_);
  return out;
}

std::vector<std::string> read_word_list(const std::filesystem::path& path) {
  std::vector<std::string> words;
  for (const auto& line : read_lines(path)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    words.emplace_back(t);
  }
  return words;
}

SentimentLexicon load_lexicon(const std::filesystem::path& positive_path,
                              const std::filesystem::path& negative_path,
                              const std::vector<std::string>& stopwords) {
  return SentimentLexicon::from_words(read_word_list(positive_path), read_word_list(negative_path),
                                      stopwords);
}

SentimentScore score_sentence(const Tokens& tokens, const SentimentLexicon& lex) {
  int score = 0;
  for (const auto& t : tokens) {
    if (lex.is_positive(t)) {
      ++score;
    } else if (lex.is_negative(t)) {
      --score;
    }
  }
  return SentimentScore::from_score(score);
}

}  // namespace dualdec
