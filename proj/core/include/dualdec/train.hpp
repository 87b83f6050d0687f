#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualdec/corpus.hpp"
#include "dualdec/model.hpp"
#include "dualdec/parameters.hpp"

namespace dualdec {

struct TrainConfig {
  std::size_t embedding_dim = 300;
  std::size_t hidden_dim = 100;
  double learning_rate = 0.0002;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  double grad_clip_norm = 5.0;
  std::uint64_t seed = 1;
  ModelKind model_kind = ModelKind::kDual;
  /// 0 means no step limit.
  std::size_t max_steps = 0;
  std::size_t max_src_len = 50;
  std::size_t max_tgt_len = 50;
  double init_scale = 0.08;

  /// Throws ConfigError on invalid combinations.
  void validate() const;
};

/// Sets one field from its textual name and value. ConfigError on unknown
/// keys or unparsable values.
void apply_config_value(TrainConfig& config, std::string_view key, std::string_view value);

/// `key=value` lines; blank lines and '#' comments are ignored.
TrainConfig parse_train_config(std::string_view text, TrainConfig base = {});

// Adam

struct AdamConfig {
  double learning_rate = 0.0002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamConfig from(const TrainConfig& c) {
    return {c.learning_rate, c.adam_beta1, c.adam_beta2, c.adam_epsilon};
  }
};

template <typename T>
struct AdamState {
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
  std::uint64_t step = 0;

  explicit AdamState(const ParameterSet<T>& params);
};

/// Bias-corrected Adam update of every parameter. Leaves everything
/// untouched and throws NonFiniteError when a gradient is NaN/Inf.
template <typename T>
void adam_step(ParameterSet<T>& params, const Gradients<T>& grads, AdamState<T>& state,
               const AdamConfig& config);

/// Stops after `patience` consecutive epochs without a strictly lower
/// validation loss.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  /// Returns true when training should stop after this epoch.
  bool update(double valid_loss);
  bool last_improved() const { return last_improved_; }
  double best() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t bad_epochs_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  bool last_improved_ = false;
};

// Data preparation

struct EncodedCorpus {
  std::vector<EncodedInstance> train;
  std::vector<EncodedInstance> valid;
  std::size_t post_vocab_size = 0;
  std::size_t resp_vocab_size = 0;
};

/// Encodes with the given vocabularies, truncating posts and responses to the
/// length caps. `truncated` (optional) counts sequences that were cut.
EncodedInstance encode_instance(const Instance& inst, const Vocabulary& post_vocab,
                                const Vocabulary& resp_vocab, std::size_t max_src_len,
                                std::size_t max_tgt_len, std::size_t* truncated = nullptr);

/// Encodes a whole split and prints one warning line to stderr when anything
/// had to be truncated.
std::vector<EncodedInstance> encode_instances(const std::vector<Instance>& instances,
                                              const Vocabulary& post_vocab,
                                              const Vocabulary& resp_vocab,
                                              std::size_t max_src_len, std::size_t max_tgt_len);

/// PAD-filled id matrices for a batch with per-row lengths as the mask.
struct PaddedBatch {
  std::size_t rows = 0;
  std::size_t post_width = 0;
  std::size_t resp_width = 0;
  std::vector<TokenId> posts;      // rows x post_width
  std::vector<TokenId> responses;  // rows x resp_width
  std::vector<std::size_t> post_lengths;
  std::vector<std::size_t> resp_lengths;
  std::vector<Label> labels;

  /// Row `i` with padding masked away.
  EncodedInstance instance(std::size_t i) const;
};

PaddedBatch make_batch(std::span<const EncodedInstance> instances, std::span<const std::size_t> order);

/// Mean over rows of the per-instance loss; adds d(mean)/d(params) into
/// `grads` when it is non-null.
template <typename T>
double batch_loss(const ResponseModel<T>& model, const PaddedBatch& batch, Gradients<T>* grads);

/// Mean per-instance loss without gradients.
template <typename T>
double mean_loss(const ResponseModel<T>& model, std::span<const EncodedInstance> instances);

// Training loop

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double wall_seconds = 0.0;
  std::size_t steps = 0;  // cumulative optimizer steps at the end of the epoch
};

struct TrainHooks {
  /// Replaces the mean validation loss computation when set.
  std::function<double(const ResponseModel<float>& model, std::size_t epoch)> validation_loss;
  /// Called after every optimizer step with the batch loss and the pre-clip
  /// gradient norm.
  std::function<void(std::size_t step, double loss, double grad_norm)> on_step;
};

struct TrainResult {
  /// Parameters of the epoch with the lowest validation loss.
  std::unique_ptr<ResponseModel<float>> model;
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;
  std::size_t steps = 0;
  std::size_t best_epoch = 0;
  double best_valid_loss = 0.0;
  bool early_stopped = false;
};

/// Seeded minibatch Adam with global-norm clipping and early stopping on the
/// validation loss. Throws NonFiniteError naming the batch on divergence.
TrainResult train(const EncodedCorpus& corpus, const TrainConfig& config, const TrainHooks& hooks = {});

/// JSON-lines: epoch, train_loss, valid_loss, wall_seconds.
std::string format_epoch_log(const std::vector<EpochRecord>& epochs);

ModelDims model_dims(const TrainConfig& config, std::size_t post_vocab, std::size_t resp_vocab);

}  // namespace dualdec
