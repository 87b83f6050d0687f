#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dualdec/corpus.hpp"
#include "dualdec/generate.hpp"
#include "dualdec/lexicon.hpp"
#include "dualdec/model.hpp"

namespace dualdec {

// All metrics are percentages (x100).

struct LabeledResponse {
  Tokens response;
  Label label = Label::kPositive;
};

std::vector<LabeledResponse> labeled_responses(const std::vector<Generation>& gens);

/// Share of responses whose lexicon score has the sign of the requested
/// label. Neutral responses count as wrong. EmptyInputError on no input.
double sentiment_accuracy(std::span<const LabeledResponse> items, const SentimentLexicon& lex);

/// Corpus-level distinct-n: unique n-grams over all n-grams across every
/// response. ZeroDenominatorError when no response has n tokens.
double distinct_n(const std::vector<Tokens>& responses, std::size_t n);

/// Corpus-level BLEU with uniform weights over orders 1..n, clipped counts
/// against the reference set, no smoothing and brevity penalty
/// exp(min(0, 1 - r/c)) where r sums the closest reference lengths (ties take
/// the shorter one).
double bleu_n(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references,
              std::size_t n);

/// Token to vector lookup; missing tokens read as the zero vector.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

  /// Whitespace-separated text vectors, `token v1 ... vd` per line. A leading
  /// `count dim` header line is accepted.
  static EmbeddingTable read_text(const std::filesystem::path& path);
  /// Rows of the model's response embedding, keyed by vocabulary token. The
  /// reserved symbols are left out.
  static EmbeddingTable from_model(const ResponseModel<float>& model, const Vocabulary& resp_vocab);

  void add(const Token& token, std::vector<double> vec);
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }
  const std::vector<double>* find(const Token& token) const;

  /// Mean of the token vectors (missing tokens contribute zeros).
  std::vector<double> mean_vector(const Tokens& tokens) const;

 private:
  std::size_t dim_;
  std::unordered_map<Token, std::vector<double>> table_;
};

/// Cosine of the mean vectors, 0 when either side is the zero vector.
double mean_vector_cosine(const Tokens& a, const Tokens& b, const EmbeddingTable& table);

/// Per pair the best cosine over the reference set, floored at 0; x100 mean.
double embedding_average(const std::vector<Tokens>& candidates,
                         const std::vector<std::vector<Tokens>>& references, const EmbeddingTable& table);

enum class UsageFilter { kAll, kPositive, kNegative };

struct SentiUsageRow {
  UsageFilter filter = UsageFilter::kAll;
  std::size_t pos_distinct = 0;
  std::size_t pos_tokens = 0;
  std::size_t neg_distinct = 0;
  std::size_t neg_tokens = 0;
  /// Percent of distinct sentiment words whose polarity contradicts the
  /// label. Absent for the `all` row.
  std::optional<double> err;
  /// Set when a labeled row has no sentiment words; err is then 0.
  bool err_undefined = false;
};

/// 100 * wrong / (wrong + right) over distinct-word counts; nullopt when both
/// are zero.
std::optional<double> usage_error_rate(std::size_t right_distinct, std::size_t wrong_distinct);

/// Rows for all items, label 1 items and label -1 items, in that order.
std::vector<SentiUsageRow> senti_usage(std::span<const LabeledResponse> items, const SentimentLexicon& lex);

/// Held-out references: every distinct response of a post in the split,
/// keyed by the space-joined post.
using ReferenceIndex = std::map<std::string, std::vector<Tokens>>;
ReferenceIndex build_reference_index(const std::vector<Instance>& instances);

struct EvalReport {
  std::string model;
  double sentiment_accuracy = 0.0;
  double distinct1 = 0.0;
  double distinct2 = 0.0;
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double average = 0.0;
  std::size_t n_items = 0;
  std::vector<SentiUsageRow> usage;
};

/// Full metric bundle for a generation list. References are looked up by
/// post; EmptyInputError when a post has none or the list is empty.
EvalReport evaluate_generations(const std::vector<Generation>& gens, const ReferenceIndex& refs,
                                const SentimentLexicon& lex, const EmbeddingTable& embeddings,
                                std::string model_name = {});

/// Metrics rounded to one decimal, usage rows under "sentiment_usage".
std::string report_to_json(const EvalReport& report);
/// Aligned text tables in the layout of the published results.
std::string render_report_tables(const EvalReport& report);

double round1(double v);

}  // namespace dualdec
