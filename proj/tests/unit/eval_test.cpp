#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "dualdec/errors.hpp"
#include "dualdec/eval.hpp"
#include "dualdec/text.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace dualdec;

namespace {

Tokens T(const std::string& s) { return split_tokens(s); }

const SentimentLexicon& lex() {
  static const auto l = SentimentLexicon::from_words({"good", "nice", "love"}, {"bad", "sad", "hate"});
  return l;
}

Tokens random_sentence(std::mt19937_64& rng, std::size_t vocab, std::size_t max_len) {
  Tokens s(rng() % (max_len + 1));
  for (auto& w : s) w = "t" + std::to_string(rng() % vocab);
  return s;
}

}  // namespace

TEST(Accuracy, AllMatchingSigns) {
  const std::vector<LabeledResponse> items = {{T("good x"), Label::kPositive}, {T("bad"), Label::kNegative}};
  EXPECT_DOUBLE_EQ(sentiment_accuracy(items, lex()), 100.0);
}

TEST(Accuracy, NeutralCountsAsWrong) {
  const std::vector<LabeledResponse> items = {{T("x y"), Label::kPositive}, {T("good bad"), Label::kNegative}};
  EXPECT_DOUBLE_EQ(sentiment_accuracy(items, lex()), 0.0);
}

TEST(Accuracy, HandBuiltCasesMatchRecount) {
  const std::vector<LabeledResponse> items = {
      {T("good"), Label::kPositive},         {T("good bad bad"), Label::kPositive}, {T("love nice hate"), Label::kPositive},
      {T("x"), Label::kPositive},            {T("sad"), Label::kNegative},          {T("hate good hate"), Label::kNegative},
      {T("nice"), Label::kNegative},         {T(""), Label::kNegative},             {T("bad bad good good"), Label::kNegative},
      {T("good good good"), Label::kPositive}};
  const std::vector<std::string> pos{"good", "nice", "love"}, neg{"bad", "sad", "hate"};
  int correct = 0;
  for (const auto& it : items) {
    const int s = oracle::brute_force_score(it.response, pos, neg);
    correct += (it.label == Label::kPositive ? s > 0 : s < 0);
  }
  EXPECT_EQ(correct, 5);
  EXPECT_DOUBLE_EQ(sentiment_accuracy(items, lex()), 10.0 * correct);
}

TEST(Accuracy, PermutationInvariantAndEmptyRejected) {
  std::vector<LabeledResponse> items = {{T("good"), Label::kPositive}, {T("x"), Label::kNegative}, {T("sad"), Label::kNegative}};
  const double a = sentiment_accuracy(items, lex());
  std::reverse(items.begin(), items.end());
  EXPECT_DOUBLE_EQ(sentiment_accuracy(items, lex()), a);
  EXPECT_THROW(sentiment_accuracy({}, lex()), EmptyInputError);
}

TEST(Distinct, SetCountExample) {
  EXPECT_DOUBLE_EQ(distinct_n({T("a b a"), T("b c")}, 1), 60.0);
  EXPECT_DOUBLE_EQ(distinct_n({T("a b a"), T("b c")}, 2), 100.0);
}

TEST(Distinct, DegenerateCases) {
  EXPECT_DOUBLE_EQ(distinct_n({T("x"), T("x"), T("x"), T("x")}, 1), 25.0);
  EXPECT_DOUBLE_EQ(distinct_n({T("a b c d e")}, 1), 100.0);
  EXPECT_THROW(distinct_n({T("a"), T("b")}, 2), ZeroDenominatorError);
  EXPECT_THROW(distinct_n({}, 1), ZeroDenominatorError);
}

TEST(Distinct, DuplicateResponseNeverIncreases) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Tokens> rs;
    for (int i = 0; i < 5; ++i) rs.push_back(random_sentence(rng, 8, 6));
    rs.push_back(T("t1 t2 t3"));
    for (std::size_t n : {1u, 2u}) {
      const double before = distinct_n(rs, n);
      auto more = rs;
      more.push_back(rs[rng() % rs.size()]);
      EXPECT_LE(distinct_n(more, n), before + 1e-12);
    }
  }
}

TEST(Bleu, PerfectAndDisjoint) {
  EXPECT_DOUBLE_EQ(bleu_n({T("a b c d")}, {{T("a b c d")}}, 1), 100.0);
  EXPECT_DOUBLE_EQ(bleu_n({T("a b c d")}, {{T("a b c d")}}, 2), 100.0);
  EXPECT_DOUBLE_EQ(bleu_n({T("a b")}, {{T("c d")}}, 1), 0.0);
  EXPECT_THROW(bleu_n({T("a")}, {}, 1), LengthError);
  EXPECT_THROW(bleu_n({T("a")}, {{}}, 1), EmptyInputError);
}

TEST(Bleu, ClippingAndBrevity) {
  // "the the the" vs "the cat": clipped unigram precision 1/3, c=3 > r=2.
  EXPECT_NEAR(bleu_n({T("the the the")}, {{T("the cat")}}, 1), 100.0 / 3.0, 1e-12);
  // c=2, r=4: BP = exp(1 - 2).
  EXPECT_NEAR(bleu_n({T("a b")}, {{T("a b c d")}}, 1), 100.0 * std::exp(-1.0), 1e-12);
  // closest reference length breaks ties toward the shorter one: c=3, refs 2 and 4 -> r=2.
  EXPECT_NEAR(bleu_n({T("a b c")}, {{T("a b c d"), T("a b")}}, 1), 100.0, 1e-12);
}

TEST(Bleu, InvariantUnderReferenceOrder) {
  const std::vector<Tokens> c = {T("a b c"), T("d e")};
  EXPECT_DOUBLE_EQ(bleu_n(c, {{T("a b"), T("a c b d")}, {T("e d"), T("d e f")}}, 2),
                   bleu_n(c, {{T("a c b d"), T("a b")}, {T("d e f"), T("e d")}}, 2));
}

TEST(Bleu, MatchesTextbookEvaluator) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Tokens> cands;
    std::vector<std::vector<Tokens>> refs;
    for (int i = 0; i < 20; ++i) {
      Tokens c = random_sentence(rng, 6, 8);
      if (c.empty()) c.push_back("t0");
      cands.push_back(c);
      std::vector<Tokens> set;
      const std::size_t nrefs = 1 + rng() % 3;
      for (std::size_t k = 0; k < nrefs; ++k) set.push_back(random_sentence(rng, 6, 8));
      refs.push_back(set);
    }
    for (std::size_t n : {1u, 2u}) EXPECT_NEAR(bleu_n(cands, refs, n), oracle::corpus_bleu(cands, refs, n), 1e-9);
  }
}

TEST(Average, IdenticalAndOrthogonal) {
  EmbeddingTable table;
  table.add("a", {1, 0, 0});
  table.add("b", {0, 1, 0});
  table.add("c", {0, 0, 2});
  EXPECT_NEAR(embedding_average({T("a b")}, {{T("b a")}}, table), 100.0, 1e-12);
  EXPECT_NEAR(embedding_average({T("a")}, {{T("b c")}}, table), 0.0, 1e-12);
  EXPECT_NEAR(embedding_average({T("zzz")}, {{T("a")}}, table), 0.0, 1e-12);
  EXPECT_THROW(embedding_average({}, {}, table), EmptyInputError);
}

TEST(Average, MatchesDirectCosine) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  EmbeddingTable table;
  std::map<std::string, std::vector<double>> vecs;
  for (int i = 0; i < 8; ++i) {
    std::vector<double> v{u(rng), u(rng), u(rng)};
    vecs["t" + std::to_string(i)] = v;
    table.add("t" + std::to_string(i), v);
  }
  std::vector<Tokens> cands;
  std::vector<std::vector<Tokens>> refs;
  double total = 0;
  for (int i = 0; i < 10; ++i) {
    Tokens c = random_sentence(rng, 10, 5);
    c.push_back("t1");
    std::vector<Tokens> set = {random_sentence(rng, 10, 5), random_sentence(rng, 10, 5)};
    set[0].push_back("t2");
    double best = 0;
    auto mean = [&](const Tokens& s) {
      std::vector<double> m(3, 0.0);
      for (const auto& w : s) {
        auto it = vecs.find(w);
        if (it == vecs.end()) continue;
        for (int k = 0; k < 3; ++k) m[k] += it->second[k] / static_cast<double>(s.size());
      }
      return m;
    };
    for (const auto& r : set) {
      best = std::max(best, oracle::cosine(mean(c), mean(r)));
      EXPECT_NEAR(mean_vector_cosine(c, r, table), oracle::cosine(mean(c), mean(r)), 1e-12);
    }
    total += best;
    cands.push_back(c);
    refs.push_back(set);
  }
  EXPECT_NEAR(embedding_average(cands, refs, table), 100.0 * total / 10.0, 1e-9);
}

TEST(Average, ReadTextVectors) {
  fixtures::TempDir dir;
  write_file(dir / "vec.txt", "2 3\na 1 0 0\nb 0 1 0\n");
  const auto table = EmbeddingTable::read_text(dir / "vec.txt");
  EXPECT_EQ(table.size(), 2u);
  EXPECT_EQ(table.dim(), 3u);
  write_file(dir / "bad.txt", "a 1 0\nb 1 x\n");
  EXPECT_THROW(EmbeddingTable::read_text(dir / "bad.txt"), FormatError);
  write_file(dir / "ragged.txt", "a 1 0\nb 1 0 0\n");
  EXPECT_THROW(EmbeddingTable::read_text(dir / "ragged.txt"), FormatError);
}

TEST(Usage, PublishedErrorRates) {
  struct Cell {
    std::size_t right, wrong;
    double err;
  };
  const Cell cells[] = {{312, 51, 14.0}, {369, 53, 12.6}, {486, 44, 8.3}, {587, 39, 6.2}};
  for (const auto& c : cells) EXPECT_NEAR(*usage_error_rate(c.right, c.wrong), c.err, 0.05);
  EXPECT_FALSE(usage_error_rate(0, 0).has_value());
}

TEST(Usage, CountsPerFilter) {
  const std::vector<LabeledResponse> items = {
      {T("good good nice bad"), Label::kPositive}, {T("love x"), Label::kPositive}, {T("sad sad good"), Label::kNegative}};
  const auto rows = senti_usage(items, lex());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].filter, UsageFilter::kAll);
  EXPECT_EQ(rows[0].pos_distinct, 3u);
  EXPECT_EQ(rows[0].pos_tokens, 5u);
  EXPECT_EQ(rows[0].neg_distinct, 2u);
  EXPECT_EQ(rows[0].neg_tokens, 3u);
  EXPECT_FALSE(rows[0].err.has_value());
  EXPECT_EQ(rows[1].pos_distinct, 3u);
  EXPECT_EQ(rows[1].neg_distinct, 1u);
  EXPECT_NEAR(*rows[1].err, 25.0, 1e-12);
  EXPECT_EQ(rows[2].neg_distinct, 1u);
  EXPECT_EQ(rows[2].pos_distinct, 1u);
  EXPECT_NEAR(*rows[2].err, 50.0, 1e-12);
  for (const auto& r : rows) {
    EXPECT_LE(r.pos_distinct, r.pos_tokens);
    EXPECT_LE(r.neg_distinct, r.neg_tokens);
  }
}

TEST(Usage, NoSentimentWordsFlagsUndefinedError) {
  const auto rows = senti_usage(std::vector<LabeledResponse>{{T("x y"), Label::kPositive}}, lex());
  EXPECT_EQ(rows[1].pos_distinct + rows[1].neg_distinct, 0u);
  EXPECT_EQ(*rows[1].err, 0.0);
  EXPECT_TRUE(rows[1].err_undefined);
}

TEST(Report, EvaluatesAgainstPostReferences) {
  const std::vector<Instance> test = {{T("p"), T("good a b"), Label::kPositive},
                                      {T("p"), T("bad a b"), Label::kNegative},
                                      {T("q"), T("nice c"), Label::kPositive},
                                      {T("q"), T("sad c"), Label::kNegative}};
  const auto refs = build_reference_index(test);
  EXPECT_EQ(refs.at("p").size(), 2u);
  std::vector<Generation> gens;
  for (const auto& inst : test) gens.push_back({inst.post, inst.label, inst.response, 0});
  EmbeddingTable table;
  for (const char* w : {"good", "bad", "nice", "sad", "a", "b", "c"}) table.add(w, {1.0, static_cast<double>(std::string(w).size())});
  const auto report = evaluate_generations(gens, refs, lex(), table, "oracle");
  EXPECT_DOUBLE_EQ(report.bleu1, 100.0);
  EXPECT_DOUBLE_EQ(report.bleu2, 100.0);
  EXPECT_NEAR(report.average, 100.0, 1e-9);
  EXPECT_DOUBLE_EQ(report.sentiment_accuracy, 100.0);
  EXPECT_EQ(report.n_items, 4u);
  EXPECT_NEAR(report.distinct1, 100.0 * 7.0 / 10.0, 1e-12);

  const auto j = nlohmann::json::parse(report_to_json(report));
  for (const char* key : {"sentiment_accuracy", "distinct1", "distinct2", "bleu1", "bleu2", "average"}) {
    ASSERT_TRUE(j.contains(key)) << key;
    EXPECT_GE(j[key].get<double>(), 0.0);
    EXPECT_LE(j[key].get<double>(), 100.0);
  }
  EXPECT_EQ(j["n_items"], 4);
  EXPECT_EQ(j["sentiment_usage"].size(), 3u);
  const std::string tables = render_report_tables(report);
  EXPECT_NE(tables.find("sent-acc"), std::string::npos);
  EXPECT_NE(tables.find("--label = -1"), std::string::npos);
  EXPECT_THROW(evaluate_generations({}, refs, lex(), table), EmptyInputError);
}

TEST(Report, RoundsToOneDecimal) {
  EXPECT_DOUBLE_EQ(round1(12.5625), 12.6);
  EXPECT_DOUBLE_EQ(round1(6.2300), 6.2);
}
