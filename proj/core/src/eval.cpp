#include "dualdec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "dualdec/errors.hpp"

namespace dualdec {

std::vector<LabeledResponse> labeled_responses(const std::vector<Generation>& gens) {
  std::vector<LabeledResponse> out;
  out.reserve(gens.size());
  for (const auto& g : gens) out.push_back({g.response, g.label});
  return out;
}

double sentiment_accuracy(std::span<const LabeledResponse> items, const SentimentLexicon& lex) {
  if (items.empty()) throw EmptyInputError("sentiment_accuracy over no generations");
  std::size_t correct = 0;
  for (const auto& item : items) {
    const int s = score_sentence(item.response, lex).score;
    if ((item.label == Label::kPositive && s > 0) || (item.label == Label::kNegative && s < 0)) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(items.size());
}

double distinct_n(const std::vector<Tokens>& responses, std::size_t n) {
  if (n == 0) throw ZeroDenominatorError("distinct_n needs n >= 1");
  std::set<std::vector<std::string_view>> unique;
  std::size_t total = 0;
  for (const auto& r : responses) {
    if (r.size() < n) continue;
    for (std::size_t i = 0; i + n <= r.size(); ++i) {
      unique.emplace(r.begin() + static_cast<std::ptrdiff_t>(i), r.begin() + static_cast<std::ptrdiff_t>(i + n));
      ++total;
    }
  }
  if (total == 0) throw ZeroDenominatorError("no " + std::to_string(n) + "-grams in the responses");
  return 100.0 * static_cast<double>(unique.size()) / static_cast<double>(total);
}

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts count_ngrams(const Tokens& t, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    ++counts[std::vector<std::string_view>(t.begin() + static_cast<std::ptrdiff_t>(i),
                                           t.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

double bleu_n(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references,
              std::size_t n) {
  if (candidates.size() != references.size()) {
    throw LengthError("bleu: " + std::to_string(candidates.size()) + " candidates but " +
                      std::to_string(references.size()) + " reference sets");
  }
  if (n == 0) throw ZeroDenominatorError("bleu needs n >= 1");
  std::vector<std::size_t> matched(n, 0), possible(n, 0);
  std::size_t cand_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Tokens& cand = candidates[i];
    const auto& refs = references[i];
    if (refs.empty()) throw EmptyInputError("bleu: empty reference set for candidate " + std::to_string(i));
    cand_len += cand.size();
    std::size_t best = refs[0].size();
    for (const auto& r : refs) {
      const auto d = [&](std::size_t len) { return len > cand.size() ? len - cand.size() : cand.size() - len; };
      if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
    }
    ref_len += best;
    for (std::size_t k = 1; k <= n; ++k) {
      NgramCounts max_ref;
      for (const auto& r : refs) {
        for (const auto& [g, c] : count_ngrams(r, k)) max_ref[g] = std::max(max_ref[g], c);
      }
      for (const auto& [g, c] : count_ngrams(cand, k)) {
        auto it = max_ref.find(g);
        if (it != max_ref.end()) matched[k - 1] += std::min(c, it->second);
      }
      if (cand.size() >= k) possible[k - 1] += cand.size() - k + 1;
    }
  }
  if (cand_len == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (matched[k] == 0 || possible[k] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched[k]) / static_cast<double>(possible[k]));
  }
  const double bp = std::exp(std::min(0.0, 1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len)));
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(n));
}

// Embeddings

EmbeddingTable EmbeddingTable::read_text(const std::filesystem::path& path) {
  EmbeddingTable table;
  bool first = true;
  for (const auto& line : read_lines(path)) {
    const Tokens fields = split_tokens(line);
    if (fields.empty()) continue;
    if (first) {
      first = false;
      if (fields.size() == 2 && std::all_of(fields[0].begin(), fields[0].end(), ::isdigit) &&
          std::all_of(fields[1].begin(), fields[1].end(), ::isdigit)) {
        continue;
      }
    }
    std::vector<double> vec;
    vec.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      try {
        vec.push_back(std::stod(fields[i]));
      } catch (const std::exception&) {
        throw FormatError("bad embedding value '" + fields[i] + "' in " + path.string());
      }
    }
    table.add(fields[0], std::move(vec));
  }
  return table;
}

EmbeddingTable EmbeddingTable::from_model(const ResponseModel<float>& model, const Vocabulary& resp_vocab) {
  const auto& emb = model.parameters().get("resp_embedding").value;
  if (emb.shape()[0] != resp_vocab.size()) {
    throw ModelMismatchError("response vocabulary does not match the model embedding table");
  }
  const std::size_t d = emb.shape()[1];
  EmbeddingTable table(d);
  for (std::size_t i = Vocabulary::kReserved; i < resp_vocab.size(); ++i) {
    std::vector<double> vec(emb.data() + i * d, emb.data() + (i + 1) * d);
    table.add(resp_vocab.token(static_cast<TokenId>(i)), std::move(vec));
  }
  return table;
}

void EmbeddingTable::add(const Token& token, std::vector<double> vec) {
  if (dim_ == 0) dim_ = vec.size();
  if (vec.size() != dim_) {
    throw FormatError("embedding for '" + token + "' has " + std::to_string(vec.size()) +
                      " dimensions, expected " + std::to_string(dim_));
  }
  table_[token] = std::move(vec);
}

const std::vector<double>* EmbeddingTable::find(const Token& token) const {
  auto it = table_.find(token);
  return it == table_.end() ? nullptr : &it->second;
}

std::vector<double> EmbeddingTable::mean_vector(const Tokens& tokens) const {
  std::vector<double> mean(dim_, 0.0);
  if (tokens.empty()) return mean;
  for (const auto& t : tokens) {
    if (const auto* v = find(t)) {
      for (std::size_t i = 0; i < dim_; ++i) mean[i] += (*v)[i];
    }
  }
  for (auto& x : mean) x /= static_cast<double>(tokens.size());
  return mean;
}

double mean_vector_cosine(const Tokens& a, const Tokens& b, const EmbeddingTable& table) {
  const auto u = table.mean_vector(a);
  const auto v = table.mean_vector(b);
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

double embedding_average(const std::vector<Tokens>& candidates,
                         const std::vector<std::vector<Tokens>>& references, const EmbeddingTable& table) {
  if (candidates.empty()) throw EmptyInputError("embedding_average over no candidates");
  if (candidates.size() != references.size()) {
    throw LengthError("embedding_average: " + std::to_string(candidates.size()) + " candidates but " +
                      std::to_string(references.size()) + " reference sets");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (references[i].empty()) throw EmptyInputError("embedding_average: empty reference set");
    double best = 0.0;
    for (const auto& r : references[i]) best = std::max(best, mean_vector_cosine(candidates[i], r, table));
    total += best;
  }
  return 100.0 * total / static_cast<double>(candidates.size());
}

// Sentiment word usage

std::optional<double> usage_error_rate(std::size_t right_distinct, std::size_t wrong_distinct) {
  if (right_distinct + wrong_distinct == 0) return std::nullopt;
  return 100.0 * static_cast<double>(wrong_distinct) / static_cast<double>(right_distinct + wrong_distinct);
}

std::vector<SentiUsageRow> senti_usage(std::span<const LabeledResponse> items, const SentimentLexicon& lex) {
  std::vector<SentiUsageRow> rows;
  for (UsageFilter filter : {UsageFilter::kAll, UsageFilter::kPositive, UsageFilter::kNegative}) {
    SentiUsageRow row;
    row.filter = filter;
    std::set<Token> pos, neg;
    for (const auto& item : items) {
      if (filter == UsageFilter::kPositive && item.label != Label::kPositive) continue;
      if (filter == UsageFilter::kNegative && item.label != Label::kNegative) continue;
      for (const auto& t : item.response) {
        if (lex.is_positive(t)) {
          pos.insert(t);
          ++row.pos_tokens;
        } else if (lex.is_negative(t)) {
          neg.insert(t);
          ++row.neg_tokens;
        }
      }
    }
    row.pos_distinct = pos.size();
    row.neg_distinct = neg.size();
    if (filter != UsageFilter::kAll) {
      const auto err = filter == UsageFilter::kPositive ? usage_error_rate(row.pos_distinct, row.neg_distinct)
                                                        : usage_error_rate(row.neg_distinct, row.pos_distinct);
      row.err = err.value_or(0.0);
      row.err_undefined = !err.has_value();
    }
    rows.push_back(row);
  }
  return rows;
}

ReferenceIndex build_reference_index(const std::vector<Instance>& instances) {
  ReferenceIndex refs;
  for (const auto& inst : instances) {
    auto& list = refs[join_tokens(inst.post)];
    if (std::find(list.begin(), list.end(), inst.response) == list.end()) list.push_back(inst.response);
  }
  return refs;
}

EvalReport evaluate_generations(const std::vector<Generation>& gens, const ReferenceIndex& refs,
                                const SentimentLexicon& lex, const EmbeddingTable& embeddings,
                                std::string model_name) {
  if (gens.empty()) throw EmptyInputError("no generations to evaluate");
  EvalReport report;
  report.model = std::move(model_name);
  report.n_items = gens.size();

  std::vector<Tokens> candidates;
  std::vector<std::vector<Tokens>> references;
  for (const auto& g : gens) {
    auto it = refs.find(join_tokens(g.post));
    if (it == refs.end()) throw EmptyInputError("no references for post '" + join_tokens(g.post) + "'");
    candidates.push_back(g.response);
    references.push_back(it->second);
  }
  const auto items = labeled_responses(gens);
  report.sentiment_accuracy = sentiment_accuracy(items, lex);
  // A model that only emits empty or one-token responses has no n-grams; the
  // report shows 0 rather than failing.
  const auto distinct_or_zero = [&](std::size_t n) {
    try {
      return distinct_n(candidates, n);
    } catch (const ZeroDenominatorError&) {
      return 0.0;
    }
  };
  report.distinct1 = distinct_or_zero(1);
  report.distinct2 = distinct_or_zero(2);
  report.bleu1 = bleu_n(candidates, references, 1);
  report.bleu2 = bleu_n(candidates, references, 2);
  report.average = embedding_average(candidates, references, embeddings);
  report.usage = senti_usage(items, lex);
  return report;
}

double round1(double v) {
  return std::round(v * 10.0) / 10.0;
}

namespace {

const char* filter_name(UsageFilter f) {
  switch (f) {
    case UsageFilter::kAll: return "all";
    case UsageFilter::kPositive: return "1";
    case UsageFilter::kNegative: return "-1";
  }
  return "all";
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["n_items"] = r.n_items;
  j["sentiment_accuracy"] = round1(r.sentiment_accuracy);
  j["distinct1"] = round1(r.distinct1);
  j["distinct2"] = round1(r.distinct2);
  j["bleu1"] = round1(r.bleu1);
  j["bleu2"] = round1(r.bleu2);
  j["average"] = round1(r.average);
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.usage) {
    nlohmann::ordered_json o;
    o["label_filter"] = filter_name(row.filter);
    o["pos_distinct"] = row.pos_distinct;
    o["pos_tokens"] = row.pos_tokens;
    o["neg_distinct"] = row.neg_distinct;
    o["neg_tokens"] = row.neg_tokens;
    if (row.err) {
      o["err"] = round1(*row.err);
      o["err_undefined"] = row.err_undefined;
    }
    rows.push_back(std::move(o));
  }
  j["sentiment_usage"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string render_report_tables(const EvalReport& r) {
  const std::string name = r.model.empty() ? "model" : r.model;
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-18s %10s %11s %11s %7s %7s %8s\n", "model", "sent-acc", "distinct-1",
                "distinct-2", "bleu-1", "bleu-2", "average");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-18s %10.1f %11.1f %11.1f %7.1f %7.1f %8.1f\n", name.c_str(),
                r.sentiment_accuracy, r.distinct1, r.distinct2, r.bleu1, r.bleu2, r.average);
  out += buf;
  out += "\n";
  std::snprintf(buf, sizeof buf, "%-18s %20s %20s %8s\n", "model", "positive words/tokens",
                "negative words/tokens", "Err");
  out += buf;
  for (const auto& row : r.usage) {
    const std::string label = row.filter == UsageFilter::kAll ? name : std::string("  --label = ") + filter_name(row.filter);
    const std::string pos = std::to_string(row.pos_distinct) + " / " + std::to_string(row.pos_tokens);
    const std::string neg = std::to_string(row.neg_distinct) + " / " + std::to_string(row.neg_tokens);
    std::string err;
    if (row.err) {
      std::snprintf(buf, sizeof buf, "%.1f%%%s", *row.err, row.err_undefined ? "*" : "");
      err = buf;
    }
    std::snprintf(buf, sizeof buf, "%-18s %20s %20s %8s\n", label.c_str(), pos.c_str(), neg.c_str(), err.c_str());
    out += buf;
  }
  return out;
}

}  // namespace dualdec
