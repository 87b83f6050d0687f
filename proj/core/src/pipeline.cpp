#include "dualdec/pipeline.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "dualdec/errors.hpp"
#include "dualdec/text.hpp"

namespace dualdec {

BuiltCorpus build_corpus(const std::vector<RawPair>& pairs, const SentimentLexicon& lex,
                         const CorpusOptions& options) {
  BuiltCorpus out;
  out.triples = mine_triples(group_by_post(pairs), lex, options.min_len);
  out.instances = rewrite_instances(out.triples);
  out.split = strict_split(out.instances, options.ratios, options.seed);

  std::vector<Tokens> train_posts, train_responses, all_posts, all_responses;
  for (const auto& inst : out.split.train) {
    train_posts.push_back(inst.post);
    train_responses.push_back(inst.response);
  }
  for (const auto& inst : out.instances) {
    all_posts.push_back(inst.post);
    all_responses.push_back(inst.response);
  }
  out.post_vocab = Vocabulary::build(train_posts, options.vocab_cap);
  out.resp_vocab = Vocabulary::build(train_responses, options.vocab_cap);

  std::set<Tokens> posts;
  for (const auto& t : out.triples) posts.insert(t.post);

  CorpusStats& s = out.stats;
  s.pairs = pairs.size();
  s.triples = out.triples.size();
  s.posts = posts.size();
  s.triples_per_post = s.posts == 0 ? 0.0 : static_cast<double>(s.triples) / static_cast<double>(s.posts);
  s.instances = out.instances.size();
  s.train = out.split.train.size();
  s.valid = out.split.valid.size();
  s.test = out.split.test.size();
  s.post_vocab_size = out.post_vocab.size();
  s.resp_vocab_size = out.resp_vocab.size();
  s.post_vocab_coverage = out.post_vocab.coverage(all_posts);
  s.resp_vocab_coverage = out.resp_vocab.coverage(all_responses);
  return out;
}

std::string stats_to_json(const CorpusStats& s) {
  nlohmann::ordered_json j;
  j["pairs"] = s.pairs;
  j["triples"] = s.triples;
  j["posts"] = s.posts;
  j["triples_per_post"] = s.triples_per_post;
  j["instances"] = s.instances;
  j["train"] = s.train;
  j["valid"] = s.valid;
  j["test"] = s.test;
  j["post_vocab_size"] = s.post_vocab_size;
  j["resp_vocab_size"] = s.resp_vocab_size;
  j["post_vocab_coverage"] = s.post_vocab_coverage;
  j["resp_vocab_coverage"] = s.resp_vocab_coverage;
  return j.dump(2) + "\n";
}

void write_corpus_dir(const std::filesystem::path& dir, const BuiltCorpus& corpus) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "triples.tsv", format_triples_tsv(corpus.triples));
  write_file(dir / "instances.jsonl", format_instances_jsonl(corpus.instances));
  write_file(dir / "train.jsonl", format_instances_jsonl(corpus.split.train));
  write_file(dir / "valid.jsonl", format_instances_jsonl(corpus.split.valid));
  write_file(dir / "test.jsonl", format_instances_jsonl(corpus.split.test));
  write_file(dir / "post.vocab", format_vocab(corpus.post_vocab));
  write_file(dir / "resp.vocab", format_vocab(corpus.resp_vocab));
  write_file(dir / "stats.json", stats_to_json(corpus.stats));
}

CorpusDir load_corpus_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("corpus directory " + dir.string() + " not found");
  CorpusDir out;
  out.split.train = read_instances_jsonl(dir / "train.jsonl");
  out.split.valid = read_instances_jsonl(dir / "valid.jsonl");
  out.split.test = read_instances_jsonl(dir / "test.jsonl");
  const std::pair<const std::vector<Instance>*, SplitName> parts[] = {
      {&out.split.train, SplitName::kTrain}, {&out.split.valid, SplitName::kValid}, {&out.split.test, SplitName::kTest}};
  for (const auto& [list, name] : parts) {
    for (const auto& inst : *list) out.split.post_groups[join_tokens(inst.post)] = name;
  }
  out.post_vocab = read_vocab(dir / "post.vocab");
  out.resp_vocab = read_vocab(dir / "resp.vocab");
  return out;
}

EncodedCorpus encode_corpus(const CorpusDir& corpus, std::size_t max_src_len, std::size_t max_tgt_len) {
  EncodedCorpus out;
  out.train = encode_instances(corpus.split.train, corpus.post_vocab, corpus.resp_vocab, max_src_len, max_tgt_len);
  out.valid = encode_instances(corpus.split.valid, corpus.post_vocab, corpus.resp_vocab, max_src_len, max_tgt_len);
  out.post_vocab_size = corpus.post_vocab.size();
  out.resp_vocab_size = corpus.resp_vocab.size();
  return out;
}

}  // namespace dualdec
