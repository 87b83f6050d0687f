#include "dualdec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dualdec/errors.hpp"

namespace dualdec {

Label label_from_int(int v) {
  if (v == 1) return Label::kPositive;
  if (v == -1) return Label::kNegative;
  throw FormatError("label must be 1 or -1, got " + std::to_string(v));
}

std::vector<PostGroup> group_by_post(const std::vector<RawPair>& pairs) {
  std::vector<PostGroup> groups;
  std::map<Tokens, std::size_t> index;
  std::vector<std::set<Tokens>> seen;
  for (const auto& pair : pairs) {
    auto [it, inserted] = index.try_emplace(pair.post, groups.size());
    if (inserted) {
      groups.push_back(PostGroup{pair.post, {}});
      seen.emplace_back();
    }
    const std::size_t g = it->second;
    if (seen[g].insert(pair.response).second) groups[g].responses.push_back(pair.response);
  }
  return groups;
}

std::vector<Triple> mine_triples(const std::vector<PostGroup>& groups,
                                 const SentimentLexicon& lex, std::size_t min_len) {
  std::vector<Triple> triples;
  for (const auto& group : groups) {
    std::vector<const Tokens*> positives;
    std::vector<const Tokens*> negatives;
    for (const auto& resp : group.responses) {
      if (resp.size() <= min_len) continue;
      const auto polarity = score_sentence(resp, lex).polarity;
      if (polarity == Polarity::kPositive) positives.push_back(&resp);
      if (polarity == Polarity::kNegative) negatives.push_back(&resp);
    }
    for (const auto* p : positives) {
      for (const auto* n : negatives) triples.push_back(Triple{group.post, *p, *n});
    }
  }
  return triples;
}

std::vector<Instance> rewrite_instances(const std::vector<Triple>& triples) {
  std::vector<Instance> out;
  out.reserve(2 * triples.size());
  for (const auto& t : triples) {
    out.push_back(Instance{t.post, t.resp_pos, Label::kPositive});
    out.push_back(Instance{t.post, t.resp_neg, Label::kNegative});
  }
  return out;
}

const char* to_string(SplitName s) {
  switch (s) {
    case SplitName::kTrain: return "train";
    case SplitName::kValid: return "valid";
    case SplitName::kTest: return "test";
  }
  return "train";
}

std::array<std::size_t, 3> split_targets(std::size_t n, const SplitRatios& ratios) {
  const auto valid = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios[1]));
  const auto test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios[2]));
  const std::size_t held = std::min(n, valid + test);
  return {n - held, std::min(valid, held), held - std::min(valid, held)};
}

const std::vector<Instance>& SplitCorpus::split(SplitName s) const {
  switch (s) {
    case SplitName::kTrain: return train;
    case SplitName::kValid: return valid;
    case SplitName::kTest: return test;
  }
  return train;
}

SplitCorpus strict_split(const std::vector<Instance>& instances, const SplitRatios& ratios,
                         std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r > 0.0) || r >= 1.0) throw ConfigError("split ratios must lie in (0, 1)");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }

  std::vector<std::string> posts;
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> keys;
  keys.reserve(instances.size());
  for (const auto& inst : instances) {
    keys.push_back(join_tokens(inst.post));
    if (counts[keys.back()]++ == 0) posts.push_back(keys.back());
  }
  if (posts.size() < 3) {
    throw InsufficientDataError("strict split needs at least 3 distinct posts, got " +
                                std::to_string(posts.size()));
  }

  std::mt19937_64 rng(seed);
  std::shuffle(posts.begin(), posts.end(), rng);

  const auto targets = split_targets(instances.size(), ratios);
  const std::array<double, 2> boundaries = {static_cast<double>(targets[0]),
                                            static_cast<double>(targets[0] + targets[1])};

  SplitCorpus out;
  std::size_t current = 0;
  std::array<std::size_t, 3> posts_in = {0, 0, 0};
  double cumulative = 0.0;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const double k = static_cast<double>(counts[posts[i]]);
    const std::size_t remaining = posts.size() - i;
    while (current < 2 && posts_in[current] > 0) {
      const std::size_t empty_after = 2 - current;
      const double b = boundaries[current];
      const bool overshoots = std::abs(cumulative + k - b) > std::abs(cumulative - b);
      if (remaining <= empty_after || overshoots) {
        ++current;
      } else {
        break;
      }
    }
    out.post_groups[posts[i]] = static_cast<SplitName>(current);
    ++posts_in[current];
    cumulative += k;
  }

  for (std::size_t i = 0; i < instances.size(); ++i) {
    switch (out.post_groups.at(keys[i])) {
      case SplitName::kTrain: out.train.push_back(instances[i]); break;
      case SplitName::kValid: out.valid.push_back(instances[i]); break;
      case SplitName::kTest: out.test.push_back(instances[i]); break;
    }
  }
  return out;
}

// Vocabulary

const std::array<Token, Vocabulary::kReserved>& Vocabulary::reserved_tokens() {
  static const std::array<Token, kReserved> tokens = {"<pad>", "<s>", "</s>", "<unk>"};
  return tokens;
}

Vocabulary Vocabulary::build(const std::vector<Tokens>& sequences, std::size_t cap) {
  std::map<Token, std::size_t> freq;
  const auto& reserved = reserved_tokens();
  for (const auto& seq : sequences) {
    for (const auto& t : seq) {
      if (std::find(reserved.begin(), reserved.end(), t) == reserved.end()) ++freq[t];
    }
  }
  std::vector<std::pair<Token, std::size_t>> ranked(freq.begin(), freq.end());
  // std::map iteration is already lexicographic, so a stable sort on count
  // keeps ties in byte order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > cap) ranked.resize(cap);

  std::vector<Token> list(reserved.begin(), reserved.end());
  for (auto& [tok, _] : ranked) list.push_back(tok);
  return from_index_list(std::move(list));
}

Vocabulary Vocabulary::from_index_list(std::vector<Token> index_to_token) {
  const auto& reserved = reserved_tokens();
  if (index_to_token.size() < kReserved ||
      !std::equal(reserved.begin(), reserved.end(), index_to_token.begin())) {
    throw FormatError("vocabulary must start with the reserved symbols <pad> <s> </s> <unk>");
  }
  Vocabulary v;
  v.index_to_token_ = std::move(index_to_token);
  for (std::size_t i = 0; i < v.index_to_token_.size(); ++i) {
    const auto& tok = v.index_to_token_[i];
    if (tok.empty()) throw FormatError("empty token at vocabulary index " + std::to_string(i));
    if (!v.token_to_index_.emplace(tok, static_cast<TokenId>(i)).second) {
      throw FormatError("duplicate vocabulary token '" + tok + "'");
    }
  }
  return v;
}

TokenId Vocabulary::index(const Token& t) const {
  auto it = token_to_index_.find(t);
  return it == token_to_index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const Token& t) const {
  return token_to_index_.count(t) != 0;
}

const Token& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= index_to_token_.size()) {
    throw IndexError("token id " + std::to_string(id) + " out of vocabulary range");
  }
  return index_to_token_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode(const Tokens& tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(index(t));
  return ids;
}

Tokens Vocabulary::decode(std::span<const TokenId> ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(token(id));
  return out;
}

double Vocabulary::coverage(const std::vector<Tokens>& sequences) const {
  std::size_t total = 0;
  std::size_t covered = 0;
  for (const auto& seq : sequences) {
    for (const auto& t : seq) {
      ++total;
      if (contains(t)) ++covered;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(total);
}

// File formats

std::vector<RawPair> read_pairs_tsv(const std::filesystem::path& path) {
  std::vector<RawPair> pairs;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": missing tab separator");
    }
    RawPair pair{split_tokens(std::string_view(line).substr(0, tab)),
                 split_tokens(std::string_view(line).substr(tab + 1))};
    if (pair.post.empty() || pair.response.empty()) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": empty post or response");
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::string format_triples_tsv(const std::vector<Triple>& triples) {
  std::string out;
  for (const auto& t : triples) {
    out += join_tokens(t.post) + '\t' + join_tokens(t.resp_pos) + '\t' + join_tokens(t.resp_neg) + '\n';
  }
  return out;
}

std::string format_instances_jsonl(const std::vector<Instance>& instances) {
  std::string out;
  for (const auto& inst : instances) {
    nlohmann::json j;
    j["post"] = join_tokens(inst.post);
    j["response"] = join_tokens(inst.response);
    j["label"] = to_int(inst.label);
    out += j.dump() + '\n';
  }
  return out;
}

std::vector<Instance> parse_instances_jsonl(const std::string& text) {
  std::vector<Instance> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back(Instance{split_tokens(j.at("post").get<std::string>()),
                             split_tokens(j.at("response").get<std::string>()),
                             label_from_int(j.at("label").get<int>())});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("instance line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Instance> read_instances_jsonl(const std::filesystem::path& path) {
  return parse_instances_jsonl(read_file(path));
}

std::string format_vocab(const Vocabulary& vocab) {
  std::string out;
  for (const auto& t : vocab.tokens()) out += t + '\n';
  return out;
}

Vocabulary read_vocab(const std::filesystem::path& path) {
  std::vector<Token> tokens;
  for (const auto& line : read_lines(path)) {
    auto t = trim(line);
    if (!t.empty()) tokens.emplace_back(t);
  }
  return Vocabulary::from_index_list(std::move(tokens));
}

}  // namespace dualdec
