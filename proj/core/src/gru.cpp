#include "dualdec/gru.hpp"

#include <array>

#include "dualdec/errors.hpp"

namespace dualdec {

template <typename T>
GruWeights<T> add_gru_parameters(ParameterSet<T>& params, const std::string& prefix,
                                 std::size_t input_dim, std::size_t hidden_dim) {
  GruWeights<T> w;
  w.w_z = &params.add(prefix + ".W_z", Shape{hidden_dim, input_dim});
  w.w_r = &params.add(prefix + ".W_r", Shape{hidden_dim, input_dim});
  w.w_h = &params.add(prefix + ".W_h", Shape{hidden_dim, input_dim});
  w.u_z = &params.add(prefix + ".U_z", Shape{hidden_dim, hidden_dim});
  w.u_r = &params.add(prefix + ".U_r", Shape{hidden_dim, hidden_dim});
  w.u_h = &params.add(prefix + ".U_h", Shape{hidden_dim, hidden_dim});
  w.b_z = &params.add(prefix + ".b_z", Shape{hidden_dim});
  w.b_r = &params.add(prefix + ".b_r", Shape{hidden_dim});
  w.b_h = &params.add(prefix + ".b_h", Shape{hidden_dim});
  return w;
}

namespace {

template <typename T>
Var affine2(Tape<T>& t, const Parameter<T>& w, Var x, const Parameter<T>& u, Var h,
            const Parameter<T>& b) {
  const std::array<Var, 3> terms = {ops::matmul(t, t.parameter(w), x),
                                    ops::matmul(t, t.parameter(u), h), t.parameter(b)};
  return ops::add_n<T>(t, terms);
}

}  // namespace

template <typename T>
Var gru_cell(Tape<T>& tape, const GruWeights<T>& w, Var x, Var h_prev) {
  if (tape.value(x).rank() != 1 || tape.value(x).size() != w.input_dim()) {
    throw ShapeError("gru_cell: input of shape " + shape_string(tape.value(x).shape()) +
                     ", expected [" + std::to_string(w.input_dim()) + "]");
  }
  if (tape.value(h_prev).rank() != 1 || tape.value(h_prev).size() != w.hidden_dim()) {
    throw ShapeError("gru_cell: state of shape " + shape_string(tape.value(h_prev).shape()) +
                     ", expected [" + std::to_string(w.hidden_dim()) + "]");
  }
  const Var z = ops::sigmoid(tape, affine2(tape, *w.w_z, x, *w.u_z, h_prev, *w.b_z));
  const Var r = ops::sigmoid(tape, affine2(tape, *w.w_r, x, *w.u_r, h_prev, *w.b_r));
  const Var gated = ops::mul(tape, r, h_prev);
  const Var candidate = ops::tanh(tape, affine2(tape, *w.w_h, x, *w.u_h, gated, *w.b_h));
  const Var keep = ops::mul(tape, ops::one_minus(tape, z), h_prev);
  const Var update = ops::mul(tape, z, candidate);
  return ops::add(tape, keep, update);
}

template GruWeights<float> add_gru_parameters<float>(ParameterSet<float>&, const std::string&,
                                                     std::size_t, std::size_t);
template GruWeights<double> add_gru_parameters<double>(ParameterSet<double>&, const std::string&,
                                                       std::size_t, std::size_t);
template Var gru_cell<float>(Tape<float>&, const GruWeights<float>&, Var, Var);
template Var gru_cell<double>(Tape<double>&, const GruWeights<double>&, Var, Var);

}  // namespace dualdec
