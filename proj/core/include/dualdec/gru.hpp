#pragma once

#include <string>

#include "dualdec/ops.hpp"
#include "dualdec/parameters.hpp"
#include "dualdec/tape.hpp"

namespace dualdec {

/// Gate weights of one GRU layer. W_* act on the input, U_* on the previous
/// state. Pointers refer into the owning ParameterSet.
template <typename T>
struct GruWeights {
  const Parameter<T>* w_z = nullptr;
  const Parameter<T>* w_r = nullptr;
  const Parameter<T>* w_h = nullptr;
  const Parameter<T>* u_z = nullptr;
  const Parameter<T>* u_r = nullptr;
  const Parameter<T>* u_h = nullptr;
  const Parameter<T>* b_z = nullptr;
  const Parameter<T>* b_r = nullptr;
  const Parameter<T>* b_h = nullptr;

  std::size_t input_dim() const { return w_z->value.shape()[1]; }
  std::size_t hidden_dim() const { return w_z->value.shape()[0]; }
};

/// Registers `<prefix>.W_z`, `<prefix>.U_z`, `<prefix>.b_z` and the r/h
/// counterparts.
template <typename T>
GruWeights<T> add_gru_parameters(ParameterSet<T>& params, const std::string& prefix,
                                 std::size_t input_dim, std::size_t hidden_dim);

/// One GRU step:
///   z  = sigmoid(W_z x + U_z h + b_z)
///   r  = sigmoid(W_r x + U_r h + b_r)
///   h~ = tanh(W_h x + U_h (r * h) + b_h)
///   h' = (1 - z) * h + z * h~
template <typename T>
Var gru_cell(Tape<T>& tape, const GruWeights<T>& w, Var x, Var h_prev);

}  // namespace dualdec
