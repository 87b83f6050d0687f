#include "dualdec/train.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "dualdec/errors.hpp"
#include "dualdec/ops.hpp"
#include "dualdec/tape.hpp"
#include "dualdec/text.hpp"

namespace dualdec {

// Config

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (embedding_dim < 1 || hidden_dim < 1) throw ConfigError("embedding_dim and hidden_dim must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be > 0");
  if (!(grad_clip_norm > 0.0)) throw ConfigError("grad_clip_norm must be > 0");
  if (max_src_len < 1 || max_tgt_len < 1) throw ConfigError("length caps must be >= 1");
  if (!(init_scale >= 0.0)) throw ConfigError("init_scale must be >= 0");
}

namespace {

template <typename N>
N parse_number(std::string_view key, std::string_view value) {
  N out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

}  // namespace

void apply_config_value(TrainConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  if (key == "embedding_dim") c.embedding_dim = parse_number<std::size_t>(key, value);
  else if (key == "hidden_dim") c.hidden_dim = parse_number<std::size_t>(key, value);
  else if (key == "learning_rate") c.learning_rate = parse_number<double>(key, value);
  else if (key == "adam_beta1") c.adam_beta1 = parse_number<double>(key, value);
  else if (key == "adam_beta2") c.adam_beta2 = parse_number<double>(key, value);
  else if (key == "adam_epsilon") c.adam_epsilon = parse_number<double>(key, value);
  else if (key == "batch_size") c.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "max_epochs") c.max_epochs = parse_number<std::size_t>(key, value);
  else if (key == "patience") c.patience = parse_number<std::size_t>(key, value);
  else if (key == "grad_clip_norm") c.grad_clip_norm = parse_number<double>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "model_kind") c.model_kind = model_kind_from_string(value);
  else if (key == "max_steps") c.max_steps = parse_number<std::size_t>(key, value);
  else if (key == "max_src_len") c.max_src_len = parse_number<std::size_t>(key, value);
  else if (key == "max_tgt_len") c.max_tgt_len = parse_number<std::size_t>(key, value);
  else if (key == "init_scale") c.init_scale = parse_number<double>(key, value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

TrainConfig parse_train_config(std::string_view text, TrainConfig base) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    apply_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

ModelDims model_dims(const TrainConfig& config, std::size_t post_vocab, std::size_t resp_vocab) {
  ModelDims d;
  d.post_vocab = post_vocab;
  d.resp_vocab = resp_vocab;
  d.embedding_dim = config.embedding_dim;
  d.hidden_dim = config.hidden_dim;
  d.max_src_len = config.max_src_len;
  d.max_tgt_len = config.max_tgt_len;
  return d;
}

// Adam

template <typename T>
AdamState<T>::AdamState(const ParameterSet<T>& params) {
  for (const auto& p : params) {
    first_moment.emplace_back(p.value.shape());
    second_moment.emplace_back(p.value.shape());
  }
}

template <typename T>
void adam_step(ParameterSet<T>& params, const Gradients<T>& grads, AdamState<T>& state,
               const AdamConfig& config) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and state sizes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params.at(i).value.shape()) {
      throw ShapeError("adam_step: gradient shape mismatch for " + params.at(i).name);
    }
  }
  if (!grads.all_finite()) throw NonFiniteError("adam_step: non-finite gradient");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.at(i).value.values();
    auto g = grads[i].values();
    auto m = state.first_moment[i].values();
    auto v = state.second_moment[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (T(1) - b1) * g[k];
      v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
      const double m_hat = static_cast<double>(m[k]) / correction1;
      const double v_hat = static_cast<double>(v[k]) / correction2;
      p[k] = static_cast<T>(static_cast<double>(p[k]) -
                            config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon));
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(ParameterSet<float>&, const Gradients<float>&, AdamState<float>&,
                               const AdamConfig&);
template void adam_step<double>(ParameterSet<double>&, const Gradients<double>&, AdamState<double>&,
                                const AdamConfig&);

bool EarlyStopper::update(double valid_loss) {
  last_improved_ = valid_loss < best_;
  if (last_improved_) {
    best_ = valid_loss;
    bad_epochs_ = 0;
    return false;
  }
  return ++bad_epochs_ >= patience_;
}

// Data preparation

EncodedInstance encode_instance(const Instance& inst, const Vocabulary& post_vocab,
                                const Vocabulary& resp_vocab, std::size_t max_src_len,
                                std::size_t max_tgt_len, std::size_t* truncated) {
  EncodedInstance out{post_vocab.encode(inst.post), resp_vocab.encode(inst.response), inst.label};
  if (out.post.size() > max_src_len) {
    out.post.resize(max_src_len);
    if (truncated) ++*truncated;
  }
  if (out.response.size() > max_tgt_len) {
    out.response.resize(max_tgt_len);
    if (truncated) ++*truncated;
  }
  return out;
}

std::vector<EncodedInstance> encode_instances(const std::vector<Instance>& instances,
                                              const Vocabulary& post_vocab,
                                              const Vocabulary& resp_vocab,
                                              std::size_t max_src_len, std::size_t max_tgt_len) {
  std::vector<EncodedInstance> out;
  out.reserve(instances.size());
  std::size_t truncated = 0;
  for (const auto& inst : instances) {
    out.push_back(encode_instance(inst, post_vocab, resp_vocab, max_src_len, max_tgt_len, &truncated));
  }
  if (truncated > 0) {
    std::clog << "warning: truncated " << truncated << " sequence(s) to " << max_src_len << "/"
              << max_tgt_len << " tokens\n";
  }
  return out;
}

EncodedInstance PaddedBatch::instance(std::size_t i) const {
  EncodedInstance out;
  const auto* prow = posts.data() + i * post_width;
  const auto* rrow = responses.data() + i * resp_width;
  out.post.assign(prow, prow + post_lengths[i]);
  out.response.assign(rrow, rrow + resp_lengths[i]);
  out.label = labels[i];
  return out;
}

PaddedBatch make_batch(std::span<const EncodedInstance> instances, std::span<const std::size_t> order) {
  PaddedBatch b;
  b.rows = order.size();
  for (std::size_t idx : order) {
    b.post_width = std::max(b.post_width, instances[idx].post.size());
    b.resp_width = std::max(b.resp_width, instances[idx].response.size());
  }
  b.posts.assign(b.rows * b.post_width, Vocabulary::kPad);
  b.responses.assign(b.rows * b.resp_width, Vocabulary::kPad);
  for (std::size_t r = 0; r < b.rows; ++r) {
    const auto& inst = instances[order[r]];
    std::copy(inst.post.begin(), inst.post.end(), b.posts.begin() + static_cast<std::ptrdiff_t>(r * b.post_width));
    std::copy(inst.response.begin(), inst.response.end(),
              b.responses.begin() + static_cast<std::ptrdiff_t>(r * b.resp_width));
    b.post_lengths.push_back(inst.post.size());
    b.resp_lengths.push_back(inst.response.size());
    b.labels.push_back(inst.label);
  }
  return b;
}

template <typename T>
double batch_loss(const ResponseModel<T>& model, const PaddedBatch& batch, Gradients<T>* grads) {
  if (batch.rows == 0) throw EmptyInputError("empty batch");
  const T weight = T(1) / static_cast<T>(batch.rows);
  double total = 0.0;
  for (std::size_t r = 0; r < batch.rows; ++r) {
    Tape<T> tape;
    const EncodedInstance inst = batch.instance(r);
    Var loss = model.instance_loss(tape, inst);
    total += static_cast<double>(tape.value(loss).item());
    if (grads) {
      loss = ops::scale(tape, loss, weight);
      tape.backward(loss);
      tape.accumulate_gradients(*grads);
    }
  }
  return total / static_cast<double>(batch.rows);
}

template <typename T>
double mean_loss(const ResponseModel<T>& model, std::span<const EncodedInstance> instances) {
  if (instances.empty()) throw EmptyInputError("mean_loss over no instances");
  double total = 0.0;
  for (const auto& inst : instances) {
    Tape<T> tape;
    total += static_cast<double>(tape.value(model.instance_loss(tape, inst)).item());
  }
  return total / static_cast<double>(instances.size());
}

template double batch_loss<float>(const ResponseModel<float>&, const PaddedBatch&, Gradients<float>*);
template double batch_loss<double>(const ResponseModel<double>&, const PaddedBatch&, Gradients<double>*);
template double mean_loss<float>(const ResponseModel<float>&, std::span<const EncodedInstance>);
template double mean_loss<double>(const ResponseModel<double>&, std::span<const EncodedInstance>);

// Training loop

TrainResult train(const EncodedCorpus& corpus, const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (corpus.train.empty()) throw InsufficientDataError("training split is empty");

  TrainResult result;
  result.model = std::make_unique<ResponseModel<float>>(
      config.model_kind, model_dims(config, corpus.post_vocab_size, corpus.resp_vocab_size));
  ResponseModel<float>& model = *result.model;
  model.initialize(config.seed, static_cast<float>(config.init_scale));

  AdamState<float> adam(model.parameters());
  const AdamConfig adam_config = AdamConfig::from(config);
  Gradients<float> grads(model.parameters());
  EarlyStopper stopper(config.patience);
  std::vector<Tensor<float>> best = model.parameters().snapshot();
  result.best_valid_loss = std::numeric_limits<double>::infinity();

  std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<std::size_t> order(corpus.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const auto start = std::chrono::steady_clock::now();
  bool step_limit = false;
  for (std::size_t epoch = 1; epoch <= config.max_epochs && !step_limit; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t epoch_batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const PaddedBatch batch =
          make_batch(corpus.train, std::span<const std::size_t>(order).subspan(begin, end - begin));
      const std::size_t batch_id = begin / config.batch_size;
      double loss = 0.0;
      double norm = 0.0;
      try {
        grads.zero();
        loss = batch_loss(model, batch, &grads);
        norm = grads.clip_global_norm(config.grad_clip_norm);
        if (!std::isfinite(norm)) throw NonFiniteError("non-finite gradient norm");
        adam_step(model.parameters(), grads, adam, adam_config);
      } catch (const NonFiniteError& e) {
        throw NonFiniteError("batch " + std::to_string(batch_id) + " of epoch " + std::to_string(epoch) +
                             ": " + e.what());
      }
      ++result.steps;
      result.step_losses.push_back(loss);
      epoch_loss += loss;
      ++epoch_batches;
      if (hooks.on_step) hooks.on_step(result.steps, loss, norm);
      if (config.max_steps != 0 && result.steps >= config.max_steps) {
        step_limit = true;
        break;
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss / static_cast<double>(epoch_batches);
    if (hooks.validation_loss) {
      record.valid_loss = hooks.validation_loss(model, epoch);
    } else {
      record.valid_loss = corpus.valid.empty() ? record.train_loss : mean_loss(model, corpus.valid);
    }
    record.steps = result.steps;
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.epochs.push_back(record);

    const bool stop = stopper.update(record.valid_loss);
    if (stopper.last_improved()) {
      best = model.parameters().snapshot();
      result.best_epoch = epoch;
      result.best_valid_loss = record.valid_loss;
    }
    if (stop) {
      result.early_stopped = true;
      break;
    }
  }

  model.parameters().restore(best);
  return result;
}

std::string format_epoch_log(const std::vector<EpochRecord>& epochs) {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["valid_loss"] = e.valid_loss;
    j["wall_seconds"] = e.wall_seconds;
    out += j.dump() + '\n';
  }
  return out;
}

}  // namespace dualdec
