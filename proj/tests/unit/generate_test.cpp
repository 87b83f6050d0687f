#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "dualdec/errors.hpp"
#include "dualdec/generate.hpp"
#include "dualdec/pipeline.hpp"
#include "dualdec/text.hpp"
#include "dualdec/train.hpp"
#include "toy_corpus.hpp"

using namespace dualdec;

namespace {

struct Fixture {
  fixtures::ToyCorpus toy = fixtures::make_toy_corpus(3, 10);
  SentimentLexicon lex = toy.lexicon();
  BuiltCorpus built = build_corpus(toy.pairs, lex, CorpusOptions{});
};

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

// Dual model trained until it reproduces the training split.
const ResponseModel<float>& memorized_model() {
  static const auto model = [] {
    const auto& f = fixture();
    const EncodedCorpus enc = encode_corpus(CorpusDir{f.built.split, f.built.post_vocab, f.built.resp_vocab}, 50, 50);
    TrainConfig cfg;
    cfg.embedding_dim = 16;
    cfg.hidden_dim = 16;
    cfg.batch_size = 4;
    cfg.learning_rate = 0.02;
    cfg.max_epochs = 1000;
    cfg.patience = 1000;
    cfg.max_steps = 800;
    TrainHooks hooks;
    hooks.validation_loss = [&](const ResponseModel<float>& m, std::size_t) {
      return mean_loss(m, std::span<const EncodedInstance>(enc.train));
    };
    return std::move(train(enc, cfg, hooks).model);
  }();
  return *model;
}

}  // namespace

TEST(Generate, MemorizedModelReproducesTrainingResponses) {
  const auto& f = fixture();
  const Generator<float> gen(memorized_model(), f.built.post_vocab, f.built.resp_vocab);
  for (const auto& inst : f.built.split.train) {
    EXPECT_EQ(gen.greedy_decode(inst.post, inst.label), inst.response) << join_tokens(inst.post);
  }
}

TEST(Generate, LabelsRouteToDifferentBranches) {
  const auto& f = fixture();
  const Generator<float> gen(memorized_model(), f.built.post_vocab, f.built.resp_vocab);
  const auto& post = f.built.split.train.front().post;
  const Tokens pos = gen.greedy_decode(post, Label::kPositive, 12);
  const Tokens neg = gen.greedy_decode(post, Label::kNegative, 12);
  EXPECT_LE(pos.size(), 12u);
  EXPECT_LE(neg.size(), 12u);
  EXPECT_GT(score_sentence(pos, f.lex).score, 0);
  EXPECT_LT(score_sentence(neg, f.lex).score, 0);
}

TEST(Generate, PositiveDecodingNeverReadsNegativeDecoder) {
  ResponseModel<double> m(ModelKind::kDual, ModelDims{20, 20, 4, 3, 50, 50});
  m.initialize(2, 0.5);
  const std::vector<TokenId> post{4, 8, 9};
  const auto before = m.greedy_decode(post, Label::kPositive, 10);
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    auto& p = m.parameters().at(i);
    if (p.name.rfind("neg.", 0) == 0) p.value.fill(std::numeric_limits<double>::quiet_NaN());
  }
  EXPECT_EQ(m.greedy_decode(post, Label::kPositive, 10), before);
  EXPECT_THROW(m.greedy_decode(post, Label::kNegative, 10), NonFiniteError);
}

TEST(Generate, TapeTouchesOnlySelectedBranch) {
  ResponseModel<double> m(ModelKind::kDual, ModelDims{20, 20, 4, 3, 50, 50});
  m.initialize(2, 0.5);
  Tape<double> t;
  const auto enc = m.encode_post(t, std::vector<TokenId>{4, 5});
  const Var keys = m.attention_keys(t, Branch::kPositive, enc);
  m.decode_step(t, Branch::kPositive, m.initial_state(t, Branch::kPositive, enc, Label::kPositive), Vocabulary::kSos,
                enc, keys);
  for (const auto* p : t.touched_parameters()) EXPECT_NE(p->name.rfind("neg.", 0), 0u) << p->name;
}

TEST(Generate, EmptyBatchWritesHeaderOnly) {
  const auto& f = fixture();
  const Generator<float> gen(memorized_model(), f.built.post_vocab, f.built.resp_vocab);
  const auto gens = gen.batch_generate({}, {}, f.lex);
  const std::string file = format_generations_jsonl(gens, "test header");
  EXPECT_EQ(file, "# test header\n");
  EXPECT_TRUE(parse_generations_jsonl(file).empty());
}

TEST(Generate, OneLinePerInputWithRescoredSentiment) {
  const auto& f = fixture();
  const Generator<float> gen(memorized_model(), f.built.post_vocab, f.built.resp_vocab);
  std::vector<Tokens> posts;
  std::vector<Label> labels;
  for (const auto& inst : f.built.split.test) {
    posts.push_back(inst.post);
    labels.push_back(inst.label);
  }
  const auto gens = gen.batch_generate(posts, labels, f.lex);
  const std::string file = format_generations_jsonl(gens, "h");
  EXPECT_EQ(count_lines(file), posts.size() + 1);
  const auto parsed = parse_generations_jsonl(file);
  ASSERT_EQ(parsed.size(), posts.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    EXPECT_EQ(parsed[i].post, posts[i]);
    EXPECT_EQ(parsed[i].label, labels[i]);
    EXPECT_EQ(parsed[i].response, gens[i].response);
    EXPECT_EQ(parsed[i].sent_score, score_sentence(parsed[i].response, f.lex).score);
  }
  EXPECT_EQ(format_generations_jsonl(gen.batch_generate(posts, labels, f.lex), "h"), file);
}

TEST(Generate, MismatchedInputs) {
  const auto& f = fixture();
  const Generator<float> gen(memorized_model(), f.built.post_vocab, f.built.resp_vocab);
  EXPECT_THROW(gen.batch_generate({{"w01"}}, {}, f.lex), EmptyInputError);
  const auto small = Vocabulary::build({{"a"}});
  EXPECT_THROW(Generator<float>(memorized_model(), small, f.built.resp_vocab), ModelMismatchError);
}

TEST(Generate, OverlongPostIsTruncated) {
  const auto& f = fixture();
  const Generator<float> gen(memorized_model(), f.built.post_vocab, f.built.resp_vocab);
  const Tokens longer(80, "w01");
  EXPECT_NO_THROW(gen.greedy_decode(longer, Label::kPositive, 5));
}

TEST(Generate, MalformedLinesAreFormatErrors) {
  EXPECT_THROW(parse_generations_jsonl("{\"post\": \"a\"}\n"), FormatError);
  EXPECT_THROW(parse_generations_jsonl("not json\n"), FormatError);
}
