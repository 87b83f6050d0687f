#include "commands.hpp"

#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "dualdec/checkpoint.hpp"
#include "dualdec/errors.hpp"
#include "dualdec/eval.hpp"
#include "dualdec/generate.hpp"
#include "dualdec/lexicon.hpp"
#include "dualdec/pipeline.hpp"
#include "dualdec/text.hpp"
#include "dualdec/train.hpp"

namespace dualdec::cli {
namespace {

SentimentLexicon load_lexicon_files(const LexiconPaths& p) {
  std::vector<std::string> stopwords;
  if (!p.stopwords.empty()) stopwords = read_word_list(p.stopwords);
  return load_lexicon(p.positive, p.negative, stopwords);
}

std::string format_config(const TrainConfig& c) {
  std::ostringstream o;
  o << std::setprecision(17);
  o << "model_kind=" << to_string(c.model_kind) << "\n"
    << "embedding_dim=" << c.embedding_dim << "\n"
    << "hidden_dim=" << c.hidden_dim << "\n"
    << "learning_rate=" << c.learning_rate << "\n"
    << "adam_beta1=" << c.adam_beta1 << "\n"
    << "adam_beta2=" << c.adam_beta2 << "\n"
    << "adam_epsilon=" << c.adam_epsilon << "\n"
    << "batch_size=" << c.batch_size << "\n"
    << "max_epochs=" << c.max_epochs << "\n"
    << "patience=" << c.patience << "\n"
    << "grad_clip_norm=" << c.grad_clip_norm << "\n"
    << "seed=" << c.seed << "\n"
    << "max_steps=" << c.max_steps << "\n"
    << "max_src_len=" << c.max_src_len << "\n"
    << "max_tgt_len=" << c.max_tgt_len << "\n"
    << "init_scale=" << c.init_scale << "\n";
  return o.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::unique_ptr<ResponseModel<float>> load_model(const std::filesystem::path& path,
                                                 const std::optional<std::string>& kind) {
  if (kind) return load_checkpoint<float>(path, model_kind_from_string(*kind));
  return load_checkpoint<float>(path);
}

std::vector<Generation> generate_split(const ResponseModel<float>& model, const CorpusDir& corpus,
                                       SplitName split, const SentimentLexicon& lex, std::size_t max_len) {
  const Generator<float> gen(model, corpus.post_vocab, corpus.resp_vocab);
  std::vector<Tokens> posts;
  std::vector<Label> labels;
  for (const auto& inst : corpus.split.split(split)) {
    posts.push_back(inst.post);
    labels.push_back(inst.label);
  }
  return gen.batch_generate(posts, labels, lex, max_len);
}

std::string generation_header(const ResponseModel<float>& model, const std::string& split, std::size_t n) {
  return std::string("dualdec generations model=") + to_string(model.kind()) + " split=" + split +
         " count=" + std::to_string(n);
}

}  // namespace

SplitRatios parse_ratios(const std::string& text) {
  std::string s = text;
  for (auto& ch : s) {
    if (ch == ',') ch = ' ';
  }
  const Tokens parts = split_tokens(s);
  if (parts.size() != 3) throw ConfigError("--ratios expects three comma-separated numbers");
  SplitRatios r{};
  for (std::size_t i = 0; i < 3; ++i) {
    try {
      std::size_t used = 0;
      r[i] = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument(parts[i]);
    } catch (const std::exception&) {
      throw ConfigError("invalid ratio '" + parts[i] + "'");
    }
  }
  return r;
}

SplitName parse_split_name(const std::string& text) {
  if (text == "train") return SplitName::kTrain;
  if (text == "valid") return SplitName::kValid;
  if (text == "test") return SplitName::kTest;
  throw ConfigError("unknown split '" + text + "' (expected train, valid or test)");
}

void build_corpus_command(const BuildCorpusArgs& args, std::ostream& log) {
  const SentimentLexicon lex = load_lexicon_files(args.lexicon);
  const std::vector<RawPair> pairs = read_pairs_tsv(args.pairs);
  CorpusOptions options;
  options.min_len = args.min_len;
  options.ratios = parse_ratios(args.ratios);
  options.seed = args.seed;
  options.vocab_cap = args.vocab_cap;
  const BuiltCorpus corpus = build_corpus(pairs, lex, options);
  write_corpus_dir(args.out, corpus);
  log << "pairs " << corpus.stats.pairs << ", triples " << corpus.stats.triples << ", posts "
      << corpus.stats.posts << ", instances " << corpus.stats.instances << " (train " << corpus.stats.train
      << ", valid " << corpus.stats.valid << ", test " << corpus.stats.test << ")\n";
}

void train_command(const TrainArgs& args, std::ostream& log) {
  TrainConfig config;
  if (!args.config.empty()) config = parse_train_config(read_file(args.config));
  for (const auto& [key, value] : args.overrides) apply_config_value(config, key, value);
  if (args.model) config.model_kind = model_kind_from_string(*args.model);
  config.validate();

  const CorpusDir corpus = load_corpus_dir(args.corpus);
  const EncodedCorpus encoded = encode_corpus(corpus, config.max_src_len, config.max_tgt_len);

  TrainHooks hooks;
  TrainResult result = train(encoded, config, hooks);
  for (const auto& e : result.epochs) {
    log << "epoch " << e.epoch << " train_loss " << e.train_loss << " valid_loss " << e.valid_loss << "\n";
  }

  std::error_code ec;
  std::filesystem::create_directories(args.out, ec);
  if (ec) throw IoError("cannot create " + args.out.string() + ": " + ec.message());
  save_checkpoint(args.out / "model.ckpt", *result.model);
  write_file(args.out / "epochs.jsonl", format_epoch_log(result.epochs));
  write_file(args.out / "config.txt", format_config(config));
  log << "best epoch " << result.best_epoch << " valid_loss " << result.best_valid_loss
      << (result.early_stopped ? " (early stop)" : "") << "\n";
}

void generate_command(const GenerateArgs& args, std::ostream& log) {
  const SplitName split = parse_split_name(args.split);
  const SentimentLexicon lex = load_lexicon_files(args.lexicon);
  const CorpusDir corpus = load_corpus_dir(args.corpus);
  const auto model = load_model(args.ckpt, args.model);
  const auto gens = generate_split(*model, corpus, split, lex, args.max_len);
  write_file(args.out, format_generations_jsonl(gens, generation_header(*model, args.split, gens.size())));
  log << "wrote " << gens.size() << " generations to " << args.out.string() << "\n";
}

void evaluate_command(const EvaluateArgs& args, std::ostream& log) {
  const SplitName split = parse_split_name(args.split);
  const SentimentLexicon lex = load_lexicon_files(args.lexicon);
  const CorpusDir corpus = load_corpus_dir(args.corpus);
  if (args.ckpt.empty() && args.generations.empty()) {
    throw ConfigError("evaluate needs --ckpt or --generations");
  }
  if (args.ckpt.empty() && args.embeddings.empty()) {
    throw ConfigError("evaluate needs --ckpt or --embeddings for the Average metric");
  }

  std::unique_ptr<ResponseModel<float>> model;
  if (!args.ckpt.empty()) model = load_model(args.ckpt, args.model);

  std::vector<Generation> gens;
  if (!args.generations.empty()) {
    gens = parse_generations_jsonl(read_file(args.generations));
  } else {
    gens = generate_split(*model, corpus, split, lex, args.max_len);
  }

  const EmbeddingTable embeddings = args.embeddings.empty()
                                        ? EmbeddingTable::from_model(*model, corpus.resp_vocab)
                                        : EmbeddingTable::read_text(args.embeddings);
  const ReferenceIndex refs = build_reference_index(corpus.split.split(split));
  std::string name = model ? to_string(model->kind()) : args.generations.filename().string();
  const EvalReport report = evaluate_generations(gens, refs, lex, embeddings, name);

  const std::string json = report_to_json(report);
  if (args.out.empty()) {
    log << json;
  } else {
    write_file(args.out, json);
  }
  const std::string tables = render_report_tables(report);
  if (!args.table.empty()) write_file(args.table, tables);
  log << tables;
}

namespace {

void add_lexicon_options(CLI::App* cmd, LexiconPaths& lex) {
  cmd->add_option("--pos-lex", lex.positive, "Positive sentiment word list, one word per line")->required();
  cmd->add_option("--neg-lex", lex.negative, "Negative sentiment word list, one word per line")->required();
  cmd->add_option("--stopwords", lex.stopwords, "Words removed from both lexicon lists");
}

struct OverrideFlag {
  const char* key;
  const char* help;
};

constexpr OverrideFlag kOverrideFlags[] = {
    {"embedding_dim", "Word embedding size"},
    {"hidden_dim", "GRU hidden size"},
    {"learning_rate", "Adam learning rate"},
    {"adam_beta1", "Adam first moment decay"},
    {"adam_beta2", "Adam second moment decay"},
    {"adam_epsilon", "Adam denominator epsilon"},
    {"batch_size", "Instances per optimizer step"},
    {"max_epochs", "Upper bound on training epochs"},
    {"patience", "Epochs without validation improvement before stopping"},
    {"grad_clip_norm", "Global gradient norm clip"},
    {"seed", "Initialization and shuffling seed"},
    {"max_steps", "Stop after this many optimizer steps (0 = unlimited)"},
    {"max_src_len", "Post length cap in tokens"},
    {"max_tgt_len", "Response length cap in tokens"},
    {"init_scale", "Uniform initialization half-width"},
};

std::string flag_name(const char* key) {
  std::string s = std::string("--") + key;
  for (auto& ch : s) {
    if (ch == '_') ch = '-';
  }
  return s;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sentiment-controlled response generation with dual GRU decoders", "dualdec"};
  app.require_subcommand(1);

  BuildCorpusArgs bc;
  auto* build = app.add_subcommand("build-corpus", "Mine sentiment triples and write a split corpus directory");
  build->add_option("--pairs", bc.pairs, "Post/response pairs, one tab-separated pair per line")->required();
  add_lexicon_options(build, bc.lexicon);
  build->add_option("--min-len", bc.min_len, "Responses must be longer than this many tokens")
      ->capture_default_str();
  build->add_option("--ratios", bc.ratios, "Train,valid,test instance ratios")->capture_default_str();
  build->add_option("--seed", bc.seed, "Split shuffling seed")->capture_default_str();
  build->add_option("--vocab-cap", bc.vocab_cap, "Maximum vocabulary size excluding reserved tokens")
      ->capture_default_str();
  build->add_option("--out", bc.out, "Output corpus directory")->required();

  TrainArgs tr;
  std::string model_kind;
  std::map<std::string, std::string> override_values;
  std::vector<std::pair<std::string, CLI::Option*>> override_opts;
  auto* trn = app.add_subcommand("train", "Train a model and write model.ckpt and epochs.jsonl");
  trn->add_option("--corpus", tr.corpus, "Corpus directory written by build-corpus")->required();
  auto* model_opt = trn->add_option("--model", model_kind, "Model kind (overrides model_kind in --config)")
                        ->default_str("dual")->check(CLI::IsMember({"dual", "s2s", "s2s-sent"}));
  trn->add_option("--config", tr.config, "key=value configuration file");
  trn->add_option("--out", tr.out, "Output directory")->required();
  std::map<std::string, std::string> defaults;
  for (const auto& line : split_lines(format_config(TrainConfig{}))) {
    const auto eq = line.find('=');
    defaults[line.substr(0, eq)] = line.substr(eq + 1);
  }
  for (const auto& f : kOverrideFlags) {
    auto* opt = trn->add_option(flag_name(f.key), override_values[f.key], f.help);
    opt->type_name("VALUE")->default_str(defaults[f.key]);
    override_opts.emplace_back(f.key, opt);
  }

  GenerateArgs gn;
  std::string gen_model;
  auto* gen = app.add_subcommand("generate", "Greedy-decode one response per instance of a corpus split");
  gen->add_option("--ckpt", gn.ckpt, "Checkpoint file")->required();
  gen->add_option("--corpus", gn.corpus, "Corpus directory")->required();
  gen->add_option("--split", gn.split, "Split to decode")->capture_default_str();
  add_lexicon_options(gen, gn.lexicon);
  auto* gen_model_opt = gen->add_option("--model", gen_model, "Expected model kind of the checkpoint");
  gen->add_option("--max-len", gn.max_len, "Maximum response length")->capture_default_str();
  gen->add_option("--out", gn.out, "Output JSON-lines file")->required();

  EvaluateArgs ev;
  std::string eval_model;
  auto* evl = app.add_subcommand("evaluate", "Score generations and write a JSON report");
  evl->add_option("--corpus", ev.corpus, "Corpus directory")->required();
  evl->add_option("--split", ev.split, "Split holding the references")->capture_default_str();
  add_lexicon_options(evl, ev.lexicon);
  evl->add_option("--ckpt", ev.ckpt, "Checkpoint used for decoding and as the embedding source");
  evl->add_option("--generations", ev.generations, "Existing generation file to score instead of decoding");
  evl->add_option("--embeddings", ev.embeddings, "Text word vectors for the Average metric");
  auto* eval_model_opt = evl->add_option("--model", eval_model, "Expected model kind of the checkpoint");
  evl->add_option("--max-len", ev.max_len, "Maximum response length")->capture_default_str();
  evl->add_option("--out", ev.out, "Report JSON file (stdout when omitted)");
  evl->add_option("--table", ev.table, "Also write the text tables to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: UsageError: " << e.what() << "\n";
    return static_cast<int>(ErrorCategory::kInput);
  }

  try {
    if (*build) {
      build_corpus_command(bc, out);
    } else if (*trn) {
      if (model_opt->count() > 0) tr.model = model_kind;
      for (const auto& [key, opt] : override_opts) {
        if (opt->count() > 0) tr.overrides[key] = override_values[key];
      }
      train_command(tr, out);
    } else if (*gen) {
      if (gen_model_opt->count() > 0) gn.model = gen_model;
      generate_command(gn, out);
    } else if (*evl) {
      if (eval_model_opt->count() > 0) ev.model = eval_model;
      evaluate_command(ev, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    err << "error: InternalError: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("dualdec");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace dualdec::cli
