#include "dualdec/tape.hpp"

#include <string>

#include "dualdec/errors.hpp"

namespace dualdec {

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  if (!value.all_finite()) throw NonFiniteError("constant holds non-finite values");
  nodes_.push_back(Node{std::move(value), {}, nullptr, {}});
  return Var(static_cast<std::uint32_t>(nodes_.size() - 1));
}

template <typename T>
Var Tape<T>::parameter(const Parameter<T>& p) {
  auto it = param_leaves_.find(&p);
  if (it != param_leaves_.end()) return it->second;
  if (!p.value.all_finite()) throw NonFiniteError("parameter " + p.name + " holds non-finite values");
  nodes_.push_back(Node{{}, {}, &p, {}});
  Var v(static_cast<std::uint32_t>(nodes_.size() - 1));
  param_leaves_.emplace(&p, v);
  touched_.push_back(&p);
  return v;
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, const char* op, BackwardFn backward) {
  if (!value.all_finite()) throw NonFiniteError(std::string(op) + " produced non-finite values");
  nodes_.push_back(Node{std::move(value), {}, nullptr, std::move(backward)});
  return Var(static_cast<std::uint32_t>(nodes_.size() - 1));
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  const Node& n = nodes_.at(v.id());
  return n.param ? n.param->value : n.value;
}

template <typename T>
Tensor<T>& Tape<T>::grad(Var v) {
  Node& n = nodes_.at(v.id());
  if (n.grad.empty()) n.grad = Tensor<T>(value(v).shape());
  return n.grad;
}

template <typename T>
bool Tape<T>::has_grad(Var v) const {
  return !nodes_.at(v.id()).grad.empty();
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (value(loss).size() != 1) {
    throw ShapeError("backward() needs a single-valued loss, got shape " +
                     shape_string(value(loss).shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor<T>();
  grad(loss)[0] = T{1};
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.backward) continue;
    n.backward(*this, Var(static_cast<std::uint32_t>(i)));
  }
}

template <typename T>
Gradients<T> Tape<T>::parameter_gradients(const ParameterSet<T>& params) const {
  Gradients<T> out(params);
  accumulate_gradients(out);
  return out;
}

template <typename T>
void Tape<T>::accumulate_gradients(Gradients<T>& into) const {
  for (const auto& [param, var] : param_leaves_) {
    const Node& n = nodes_[var.id()];
    if (n.grad.empty()) continue;
    if (param->index >= into.size() || into.name(param->index) != param->name) {
      throw IndexError("parameter " + param->name + " does not belong to the gradient set");
    }
    auto dst = into[param->index].values();
    auto src = n.grad.values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

template <typename T>
std::vector<const Parameter<T>*> Tape<T>::touched_parameters() const {
  return touched_;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace dualdec
