#include "dualdec/model.hpp"

#include <array>

#include "dualdec/errors.hpp"
#include "dualdec/ops.hpp"

namespace dualdec {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kDual: return "dual";
    case ModelKind::kSeq2SeqAtt: return "s2s";
    case ModelKind::kSeq2SeqAttSent: return "s2s-sent";
  }
  return "dual";
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "dual") return ModelKind::kDual;
  if (name == "s2s") return ModelKind::kSeq2SeqAtt;
  if (name == "s2s-sent") return ModelKind::kSeq2SeqAttSent;
  throw ConfigError("unknown model kind '" + std::string(name) + "' (expected dual, s2s or s2s-sent)");
}

template <typename T>
ResponseModel<T>::ResponseModel(ModelKind kind, ModelDims dims) : kind_(kind), dims_(dims) {
  if (dims.post_vocab <= Vocabulary::kReserved || dims.resp_vocab <= Vocabulary::kReserved ||
      dims.embedding_dim == 0 || dims.hidden_dim == 0) {
    throw ConfigError("model dimensions must be positive and vocabularies larger than the reserved set");
  }
  const std::size_t E = dims.embedding_dim, H = dims.hidden_dim;
  post_embedding_ = &params_.add("post_embedding", Shape{dims.post_vocab, E});
  resp_embedding_ = &params_.add("resp_embedding", Shape{dims.resp_vocab, E});
  encoder_ = add_gru_parameters(params_, "encoder", E, H);

  switch (kind) {
    case ModelKind::kDual:
      decoders_.push_back(make_decoder("pos", H));
      decoders_.push_back(make_decoder("neg", H));
      break;
    case ModelKind::kSeq2SeqAtt:
      decoders_.push_back(make_decoder("dec", H));
      break;
    case ModelKind::kSeq2SeqAttSent:
      decoders_.push_back(make_decoder("dec", 2 * H));
      sent_embedding_ = &params_.add("sent.embedding", Shape{2, H});
      sent_dense_w_ = &params_.add("sent.dense.W", Shape{H, H});
      sent_dense_b_ = &params_.add("sent.dense.b", Shape{H});
      break;
  }
}

template <typename T>
typename ResponseModel<T>::Decoder ResponseModel<T>::make_decoder(const std::string& prefix,
                                                                  std::size_t init_input) {
  const std::size_t E = dims_.embedding_dim, H = dims_.hidden_dim, V = dims_.resp_vocab;
  Decoder d;
  d.attention.w_s = &params_.add(prefix + ".attn.W_s", Shape{H, H});
  d.attention.w_h = &params_.add(prefix + ".attn.W_h", Shape{H, H});
  d.attention.v = &params_.add(prefix + ".attn.v", Shape{H});
  d.gru = add_gru_parameters(params_, prefix + ".gru", E + H, H);
  d.out_w = &params_.add(prefix + ".out.W", Shape{V, H});
  d.out_b = &params_.add(prefix + ".out.b", Shape{V});
  d.init_w = &params_.add(prefix + ".init.W", Shape{H, init_input});
  d.init_b = &params_.add(prefix + ".init.b", Shape{H});
  return d;
}

template <typename T>
void ResponseModel<T>::initialize(std::uint64_t seed, T scale) {
  params_.init_uniform(seed, scale);
}

template <typename T>
Branch ResponseModel<T>::branch_for(Label label) const {
  if (kind_ != ModelKind::kDual) return Branch::kSingle;
  return label == Label::kPositive ? Branch::kPositive : Branch::kNegative;
}

template <typename T>
std::vector<Branch> ResponseModel<T>::branches() const {
  if (kind_ == ModelKind::kDual) return {Branch::kPositive, Branch::kNegative};
  return {Branch::kSingle};
}

template <typename T>
const char* ResponseModel<T>::branch_prefix(Branch b) {
  switch (b) {
    case Branch::kPositive: return "pos";
    case Branch::kNegative: return "neg";
    case Branch::kSingle: return "dec";
  }
  return "dec";
}

template <typename T>
const typename ResponseModel<T>::Decoder& ResponseModel<T>::decoder(Branch b) const {
  if (kind_ == ModelKind::kDual) {
    if (b == Branch::kPositive) return decoders_[0];
    if (b == Branch::kNegative) return decoders_[1];
  } else if (b == Branch::kSingle) {
    return decoders_[0];
  }
  throw ModelMismatchError(std::string("branch '") + branch_prefix(b) + "' does not exist in a " +
                           to_string(kind_) + " model");
}

template <typename T>
EncoderOutput ResponseModel<T>::encode_post(Tape<T>& tape, std::span<const TokenId> post) const {
  if (post.empty() || post.size() > dims_.max_src_len) {
    throw LengthError("post length " + std::to_string(post.size()) + " outside [1, " +
                      std::to_string(dims_.max_src_len) + "]");
  }
  EncoderOutput out;
  const Var table = tape.parameter(*post_embedding_);
  Var h = tape.constant(Tensor<T>(Shape{dims_.hidden_dim}));
  for (TokenId id : post) {
    const Var x = ops::gather_row(tape, table, static_cast<std::size_t>(id));
    h = gru_cell(tape, encoder_, x, h);
    out.states.push_back(h);
  }
  out.stacked = ops::stack_rows<T>(tape, out.states);
  out.final_state = h;
  return out;
}

template <typename T>
Var ResponseModel<T>::attention_keys(Tape<T>& tape, Branch b, const EncoderOutput& enc) const {
  const Var w_h = tape.parameter(*decoder(b).attention.w_h);
  std::vector<Var> keys;
  keys.reserve(enc.states.size());
  for (Var h : enc.states) keys.push_back(ops::matmul(tape, w_h, h));
  return ops::stack_rows<T>(tape, keys);
}

template <typename T>
AttentionOutput ResponseModel<T>::attend(Tape<T>& tape, Branch b, Var s_prev,
                                         const EncoderOutput& enc, Var keys) const {
  const Attention& a = decoder(b).attention;
  const Var query = ops::matmul(tape, tape.parameter(*a.w_s), s_prev);
  const Var hidden = ops::tanh(tape, ops::add_rowwise(tape, keys, query));
  const Var scores = ops::matmul(tape, hidden, tape.parameter(*a.v));
  const Var weights = ops::softmax_rows(tape, scores);
  const Var context = ops::matmul(tape, weights, enc.stacked);
  return {context, weights};
}

template <typename T>
Var ResponseModel<T>::initial_state(Tape<T>& tape, Branch b, const EncoderOutput& enc,
                                    Label label) const {
  const Decoder& d = decoder(b);
  Var input = enc.final_state;
  if (kind_ == ModelKind::kSeq2SeqAttSent) {
    const std::size_t row = label == Label::kPositive ? 0 : 1;
    const Var emb = ops::gather_row(tape, tape.parameter(*sent_embedding_), row);
    const std::array<Var, 2> dense = {ops::matmul(tape, tape.parameter(*sent_dense_w_), emb),
                                      tape.parameter(*sent_dense_b_)};
    const Var h_s = ops::tanh(tape, ops::add_n<T>(tape, dense));
    const std::array<Var, 2> parts = {enc.final_state, h_s};
    input = ops::concat<T>(tape, parts);
  }
  const std::array<Var, 2> affine = {ops::matmul(tape, tape.parameter(*d.init_w), input),
                                     tape.parameter(*d.init_b)};
  return ops::tanh(tape, ops::add_n<T>(tape, affine));
}

template <typename T>
StepOutput ResponseModel<T>::decode_step(Tape<T>& tape, Branch b, Var s_prev, TokenId r_prev,
                                         const EncoderOutput& enc, Var keys) const {
  const Decoder& d = decoder(b);
  const AttentionOutput att = attend(tape, b, s_prev, enc, keys);
  const Var emb = ops::gather_row(tape, tape.parameter(*resp_embedding_), static_cast<std::size_t>(r_prev));
  const std::array<Var, 2> parts = {emb, att.context};
  const Var s_next = gru_cell(tape, d.gru, ops::concat<T>(tape, parts), s_prev);
  const std::array<Var, 2> logits = {ops::matmul(tape, tape.parameter(*d.out_w), s_next),
                                     tape.parameter(*d.out_b)};
  const Var dist = ops::softmax_rows(tape, ops::add_n<T>(tape, logits));
  return {s_next, dist, att.weights};
}

template <typename T>
Var ResponseModel<T>::branch_loss(Tape<T>& tape, Branch b, const EncoderOutput& enc,
                                  std::span<const TokenId> response, Label label) const {
  if (response.empty()) throw EmptyResponseError("instance has an empty response");
  if (response.size() > dims_.max_tgt_len) {
    throw LengthError("response length " + std::to_string(response.size()) + " exceeds " +
                      std::to_string(dims_.max_tgt_len));
  }
  const Var keys = attention_keys(tape, b, enc);
  Var s = initial_state(tape, b, enc, label);
  std::vector<Var> token_losses;
  token_losses.reserve(response.size() + 1);
  TokenId prev = Vocabulary::kSos;
  for (std::size_t t = 0; t <= response.size(); ++t) {
    const TokenId target = t < response.size() ? response[t] : Vocabulary::kEos;
    const StepOutput step = decode_step(tape, b, s, prev, enc, keys);
    token_losses.push_back(ops::cross_entropy(tape, step.distribution, static_cast<std::size_t>(target)));
    s = step.state;
    prev = target;
  }
  const Var total = ops::add_n<T>(tape, token_losses);
  return ops::scale(tape, total, T(1) / static_cast<T>(token_losses.size()));
}

template <typename T>
Var ResponseModel<T>::instance_loss(Tape<T>& tape, const EncodedInstance& inst) const {
  if (inst.response.empty()) throw EmptyResponseError("instance has an empty response");
  const EncoderOutput enc = encode_post(tape, inst.post);
  if (kind_ != ModelKind::kDual) return branch_loss(tape, Branch::kSingle, enc, inst.response, inst.label);

  const LossGate gate = LossGate::for_label(inst.label);
  std::vector<Var> terms;
  const std::array<std::pair<Branch, double>, 2> weighted = {
      std::pair{Branch::kPositive, gate.alpha}, std::pair{Branch::kNegative, gate.beta}};
  for (const auto& [branch, weight] : weighted) {
    if (weight == 0.0) continue;
    Var loss = branch_loss(tape, branch, enc, inst.response, inst.label);
    if (weight != 1.0) loss = ops::scale(tape, loss, static_cast<T>(weight));
    terms.push_back(loss);
  }
  return terms.size() == 1 ? terms[0] : ops::add_n<T>(tape, terms);
}

template <typename T>
std::vector<TokenId> ResponseModel<T>::greedy_decode(std::span<const TokenId> post, Label label,
                                                     std::size_t max_len) const {
  Tape<T> tape;
  const Branch b = branch_for(label);
  const EncoderOutput enc = encode_post(tape, post);
  const Var keys = attention_keys(tape, b, enc);
  Var s = initial_state(tape, b, enc, label);
  std::vector<TokenId> out;
  TokenId prev = Vocabulary::kSos;
  for (std::size_t step = 0; step < max_len; ++step) {
    const StepOutput res = decode_step(tape, b, s, prev, enc, keys);
    const Tensor<T>& dist = tape.value(res.distribution);
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.size(); ++i) {
      if (dist[i] > dist[best]) best = i;
    }
    const auto id = static_cast<TokenId>(best);
    if (id == Vocabulary::kEos) break;
    if (id != Vocabulary::kSos) out.push_back(id);
    s = res.state;
    prev = id;
  }
  return out;
}

template class ResponseModel<float>;
template class ResponseModel<double>;

}  // namespace dualdec
