#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualdec/corpus.hpp"
#include "dualdec/gru.hpp"
#include "dualdec/parameters.hpp"
#include "dualdec/tape.hpp"

namespace dualdec {

enum class ModelKind {
  kDual,            // one encoder, a positive and a negative decoder
  kSeq2SeqAtt,      // single decoder, label ignored
  kSeq2SeqAttSent,  // single decoder started from encoder state + label embedding
};

/// Names used on the command line and in checkpoints: dual, s2s, s2s-sent.
const char* to_string(ModelKind kind);
/// Throws ConfigError for unknown names.
ModelKind model_kind_from_string(std::string_view name);

struct ModelDims {
  std::size_t post_vocab = Vocabulary::kDefaultCap + Vocabulary::kReserved;
  std::size_t resp_vocab = Vocabulary::kDefaultCap + Vocabulary::kReserved;
  std::size_t embedding_dim = 300;
  std::size_t hidden_dim = 100;
  std::size_t max_src_len = 50;
  std::size_t max_tgt_len = 50;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Which decoder a computation runs through. Single-decoder models only have
/// kSingle; the dual model has kPositive and kNegative.
enum class Branch { kPositive, kNegative, kSingle };

/// Loss weights (alpha, beta) of the positive and negative decoders. Exactly
/// one is 1: alpha for label 1, beta for label -1.
struct LossGate {
  double alpha = 1.0;
  double beta = 0.0;

  static LossGate for_label(Label label) {
    return label == Label::kPositive ? LossGate{1.0, 0.0} : LossGate{0.0, 1.0};
  }
};

struct EncodedInstance {
  std::vector<TokenId> post;
  std::vector<TokenId> response;  // no SOS/EOS
  Label label = Label::kPositive;
};

struct EncoderOutput {
  std::vector<Var> states;  // h_1 .. h_n
  Var stacked;              // [n, hidden]
  Var final_state;          // h_n
};

struct AttentionOutput {
  Var context;  // [hidden]
  Var weights;  // [n]
};

struct StepOutput {
  Var state;         // s_t
  Var distribution;  // softmax over the response vocabulary
  Var attention_weights;
};

/// Parameterized forward and loss computations for the three architectures.
/// All methods are const: parameters are read through the tape, gradients are
/// collected from it afterwards. Instances own their parameters and are pinned
/// in memory (layers hold pointers into the parameter set).
template <typename T>
class ResponseModel {
 public:
  ResponseModel(ModelKind kind, ModelDims dims);
  ResponseModel(const ResponseModel&) = delete;
  ResponseModel& operator=(const ResponseModel&) = delete;

  ModelKind kind() const { return kind_; }
  const ModelDims& dims() const { return dims_; }
  const ParameterSet<T>& parameters() const { return params_; }
  ParameterSet<T>& parameters() { return params_; }

  /// Uniform init in [-scale, scale] from `seed`.
  void initialize(std::uint64_t seed, T scale = T(0.08));

  Branch branch_for(Label label) const;
  std::vector<Branch> branches() const;
  /// Parameter-name prefix owned by a branch ("pos", "neg" or "dec").
  static const char* branch_prefix(Branch b);

  /// Runs the encoder GRU from a zero state. LengthError when the post is
  /// empty or longer than max_src_len.
  EncoderOutput encode_post(Tape<T>& tape, std::span<const TokenId> post) const;

  /// W_h h_i for every encoder state, stacked [n, hidden]. Computed once per
  /// source sequence and branch.
  Var attention_keys(Tape<T>& tape, Branch b, const EncoderOutput& enc) const;

  /// Additive attention: e_i = v . tanh(W_s s + W_h h_i), softmax, weighted
  /// sum of encoder states.
  AttentionOutput attend(Tape<T>& tape, Branch b, Var s_prev, const EncoderOutput& enc,
                         Var keys) const;

  /// Decoder start state. tanh(W h_n + b) for the dual and plain models;
  /// tanh(W [h_n; h_s] + b) for the sentiment-embedding baseline.
  Var initial_state(Tape<T>& tape, Branch b, const EncoderOutput& enc, Label label) const;

  /// attend -> GRU over [embed(r_prev); context] -> softmax(W_o s + b_o).
  StepOutput decode_step(Tape<T>& tape, Branch b, Var s_prev, TokenId r_prev,
                         const EncoderOutput& enc, Var keys) const;

  /// Mean teacher-forced cross-entropy of `response` + EOS through branch `b`.
  Var branch_loss(Tape<T>& tape, Branch b, const EncoderOutput& enc,
                  std::span<const TokenId> response, Label label) const;

  /// Scalar training loss of one instance. For the dual model this is
  /// alpha * loss_pos + beta * loss_neg; the branch with weight 0 is not
  /// evaluated at all.
  Var instance_loss(Tape<T>& tape, const EncodedInstance& inst) const;

  /// Greedy argmax decoding from SOS until EOS or `max_len` tokens; ties go to
  /// the lowest index. SOS/EOS never appear in the result.
  std::vector<TokenId> greedy_decode(std::span<const TokenId> post, Label label,
                                     std::size_t max_len = 50) const;

 private:
  struct Attention {
    const Parameter<T>* w_s = nullptr;
    const Parameter<T>* w_h = nullptr;
    const Parameter<T>* v = nullptr;
  };
  struct Decoder {
    Attention attention;
    GruWeights<T> gru;
    const Parameter<T>* out_w = nullptr;
    const Parameter<T>* out_b = nullptr;
    const Parameter<T>* init_w = nullptr;
    const Parameter<T>* init_b = nullptr;
  };

  Decoder make_decoder(const std::string& prefix, std::size_t init_input);
  const Decoder& decoder(Branch b) const;

  ModelKind kind_;
  ModelDims dims_;
  ParameterSet<T> params_;
  const Parameter<T>* post_embedding_ = nullptr;
  const Parameter<T>* resp_embedding_ = nullptr;
  GruWeights<T> encoder_;
  std::vector<Decoder> decoders_;  // [pos, neg] or [single]
  const Parameter<T>* sent_embedding_ = nullptr;
  const Parameter<T>* sent_dense_w_ = nullptr;
  const Parameter<T>* sent_dense_b_ = nullptr;
};

extern template class ResponseModel<float>;
extern template class ResponseModel<double>;

}  // namespace dualdec
