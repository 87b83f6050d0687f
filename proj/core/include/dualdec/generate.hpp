#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dualdec/corpus.hpp"
#include "dualdec/lexicon.hpp"
#include "dualdec/model.hpp"

namespace dualdec {

struct Generation {
  Tokens post;
  Label label = Label::kPositive;
  Tokens response;
  int sent_score = 0;
};

/// Text-level wrapper around a model and its two vocabularies.
template <typename T>
class Generator {
 public:
  /// ModelMismatchError when the vocabulary sizes disagree with the model.
  Generator(const ResponseModel<T>& model, const Vocabulary& post_vocab, const Vocabulary& resp_vocab);

  /// Posts longer than the model's source cap are truncated first.
  Tokens greedy_decode(const Tokens& post, Label label, std::size_t max_len = 50) const;

  /// One Generation per (post, label), in input order. EmptyInputError if
  /// the two lists differ in length.
  std::vector<Generation> batch_generate(const std::vector<Tokens>& posts, const std::vector<Label>& labels,
                                         const SentimentLexicon& lex, std::size_t max_len = 50) const;

 private:
  const ResponseModel<T>& model_;
  const Vocabulary& post_vocab_;
  const Vocabulary& resp_vocab_;
};

/// Header comment line followed by one JSON object per generation with keys
/// post, label, response, sent_score.
std::string format_generations_jsonl(const std::vector<Generation>& gens, std::string_view header);
/// Skips '#' lines. FormatError on malformed records.
std::vector<Generation> parse_generations_jsonl(const std::string& text);

extern template class Generator<float>;
extern template class Generator<double>;

}  // namespace dualdec
