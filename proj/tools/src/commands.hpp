#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dualdec/corpus.hpp"
#include "dualdec/model.hpp"

namespace dualdec::cli {

struct LexiconPaths {
  std::filesystem::path positive;
  std::filesystem::path negative;
  std::filesystem::path stopwords;  // optional
};

struct BuildCorpusArgs {
  std::filesystem::path pairs;
  LexiconPaths lexicon;
  std::size_t min_len = 5;
  std::string ratios = "0.8,0.1,0.1";
  std::uint64_t seed = 1;
  std::size_t vocab_cap = Vocabulary::kDefaultCap;
  std::filesystem::path out;
};

struct TrainArgs {
  std::filesystem::path corpus;
  std::optional<std::string> model;
  std::filesystem::path config;  // optional
  std::map<std::string, std::string> overrides;  // TrainConfig field -> value
  std::filesystem::path out;
};

struct GenerateArgs {
  std::filesystem::path ckpt;
  std::filesystem::path corpus;
  std::string split = "test";
  LexiconPaths lexicon;
  std::optional<std::string> model;
  std::size_t max_len = 50;
  std::filesystem::path out;
};

struct EvaluateArgs {
  std::filesystem::path corpus;
  std::string split = "test";
  LexiconPaths lexicon;
  std::filesystem::path ckpt;         // generate on the fly and/or embeddings
  std::filesystem::path generations;  // evaluate an existing file
  std::filesystem::path embeddings;   // word vectors for the Average metric
  std::optional<std::string> model;
  std::size_t max_len = 50;
  std::filesystem::path out;
  std::filesystem::path table;  // optional text rendering
};

// Each command throws dualdec::Error on failure.
void build_corpus_command(const BuildCorpusArgs& args, std::ostream& log);
void train_command(const TrainArgs& args, std::ostream& log);
void generate_command(const GenerateArgs& args, std::ostream& log);
void evaluate_command(const EvaluateArgs& args, std::ostream& log);

SplitRatios parse_ratios(const std::string& text);
SplitName parse_split_name(const std::string& text);

/// Full command-line entry point. Returns the process exit code and writes
/// a single "error: <Kind>: message" line to `err` on failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dualdec::cli
