#include "dualdec/generate.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "dualdec/errors.hpp"

namespace dualdec {

template <typename T>
Generator<T>::Generator(const ResponseModel<T>& model, const Vocabulary& post_vocab,
                        const Vocabulary& resp_vocab)
    : model_(model), post_vocab_(post_vocab), resp_vocab_(resp_vocab) {
  if (post_vocab.size() != model.dims().post_vocab || resp_vocab.size() != model.dims().resp_vocab) {
    throw ModelMismatchError("vocabulary sizes " + std::to_string(post_vocab.size()) + "/" +
                             std::to_string(resp_vocab.size()) + " do not match model dimensions " +
                             std::to_string(model.dims().post_vocab) + "/" +
                             std::to_string(model.dims().resp_vocab));
  }
}

template <typename T>
Tokens Generator<T>::greedy_decode(const Tokens& post, Label label, std::size_t max_len) const {
  std::vector<TokenId> ids = post_vocab_.encode(post);
  if (ids.size() > model_.dims().max_src_len) ids.resize(model_.dims().max_src_len);
  const std::vector<TokenId> out = model_.greedy_decode(ids, label, max_len);
  return resp_vocab_.decode(out);
}

template <typename T>
std::vector<Generation> Generator<T>::batch_generate(const std::vector<Tokens>& posts,
                                                     const std::vector<Label>& labels,
                                                     const SentimentLexicon& lex, std::size_t max_len) const {
  if (posts.size() != labels.size()) {
    throw EmptyInputError("batch_generate: " + std::to_string(posts.size()) + " posts but " +
                          std::to_string(labels.size()) + " labels");
  }
  std::vector<Generation> out;
  out.reserve(posts.size());
  for (std::size_t i = 0; i < posts.size(); ++i) {
    Generation g;
    g.post = posts[i];
    g.label = labels[i];
    g.response = greedy_decode(posts[i], labels[i], max_len);
    g.sent_score = score_sentence(g.response, lex).score;
    out.push_back(std::move(g));
  }
  return out;
}

std::string format_generations_jsonl(const std::vector<Generation>& gens, std::string_view header) {
  std::string out = "# ";
  out += header;
  out += '\n';
  for (const auto& g : gens) {
    nlohmann::json j;
    j["post"] = join_tokens(g.post);
    j["label"] = to_int(g.label);
    j["response"] = join_tokens(g.response);
    j["sent_score"] = g.sent_score;
    out += j.dump() + '\n';
  }
  return out;
}

std::vector<Generation> parse_generations_jsonl(const std::string& text) {
  std::vector<Generation> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      const auto j = nlohmann::json::parse(t);
      Generation g;
      g.post = split_tokens(j.at("post").get<std::string>());
      g.label = label_from_int(j.at("label").get<int>());
      g.response = split_tokens(j.at("response").get<std::string>());
      g.sent_score = j.at("sent_score").get<int>();
      out.push_back(std::move(g));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("generation line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

template class Generator<float>;
template class Generator<double>;

}  // namespace dualdec
