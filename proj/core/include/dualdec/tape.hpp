#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <unordered_map>
#include <vector>

#include "dualdec/parameters.hpp"
#include "dualdec/tensor.hpp"

namespace dualdec {

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  explicit Var(std::uint32_t id) : id_(id) {}
  std::uint32_t id() const { return id_; }
  bool valid() const { return id_ != kInvalid; }
  friend bool operator==(Var, Var) = default;

 private:
  static constexpr std::uint32_t kInvalid = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id_ = kInvalid;
};

/// Reverse-mode computation record. Nodes are appended in evaluation order,
/// which is therefore a topological order; backward() walks it in reverse.
///
/// Parameter leaves refer to the owning ParameterSet without copying; their
/// gradients stay on the tape until collected with parameter_gradients().
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, Var self)>;

  Var constant(Tensor<T> value);
  /// One leaf per parameter per tape; repeated calls return the same Var.
  Var parameter(const Parameter<T>& p);

  /// Appends an op result. Throws NonFiniteError naming `op` when the value
  /// holds NaN or Inf.
  Var record(Tensor<T> value, const char* op, BackwardFn backward);

  const Tensor<T>& value(Var v) const;
  /// Gradient buffer of a node, zero-allocated on first access.
  Tensor<T>& grad(Var v);
  bool has_grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one value.
  /// Gradients from an earlier backward() on this tape are discarded first.
  void backward(Var loss);

  /// Gradient w.r.t. every parameter of `params`; parameters that never
  /// appeared on the tape, or that the loss does not reach, get zeros.
  Gradients<T> parameter_gradients(const ParameterSet<T>& params) const;
  /// Adds this tape's parameter gradients into `into`.
  void accumulate_gradients(Gradients<T>& into) const;

  std::size_t size() const { return nodes_.size(); }
  /// Parameters referenced by at least one leaf, in first-use order.
  std::vector<const Parameter<T>*> touched_parameters() const;

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    const Parameter<T>* param = nullptr;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, Var> param_leaves_;
  std::vector<const Parameter<T>*> touched_;
};

/// Runs backward on `loss` and returns the name-addressable gradient map.
template <typename T>
Gradients<T> backward(Tape<T>& tape, Var loss, const ParameterSet<T>& params) {
  tape.backward(loss);
  return tape.parameter_gradients(params);
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace dualdec
