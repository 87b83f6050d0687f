#pragma once

#include <cstddef>
#include <span>

#include "dualdec/tape.hpp"

namespace dualdec::ops {

// Differentiable primitives. Each records one node on the tape and throws
// ShapeError on incompatible operands.

/// Matrix product. Supports [m,k]x[k,n], [m,k]x[k] (matrix-vector) and
/// [k]x[k,n] (vector-matrix).
template <typename T> Var matmul(Tape<T>& t, Var a, Var b);

template <typename T> Var add(Tape<T>& t, Var a, Var b);
template <typename T> Var sub(Tape<T>& t, Var a, Var b);
/// Elementwise (Hadamard) product.
template <typename T> Var mul(Tape<T>& t, Var a, Var b);
template <typename T> Var scale(Tape<T>& t, Var a, T factor);
/// 1 - a, elementwise.
template <typename T> Var one_minus(Tape<T>& t, Var a);
/// Adds the vector `row` to every row of matrix `m`.
template <typename T> Var add_rowwise(Tape<T>& t, Var m, Var row);
/// Sum of equally shaped tensors.
template <typename T> Var add_n(Tape<T>& t, std::span<const Var> xs);

/// Concatenation of vectors.
template <typename T> Var concat(Tape<T>& t, std::span<const Var> xs);
template <typename T> Var slice(Tape<T>& t, Var a, std::size_t begin, std::size_t length);
/// Stacks equally sized vectors into an [n, d] matrix.
template <typename T> Var stack_rows(Tape<T>& t, std::span<const Var> rows);
/// Row `index` of a matrix (embedding lookup). Throws IndexError when out of range.
template <typename T> Var gather_row(Tape<T>& t, Var table, std::size_t index);

template <typename T> Var sigmoid(Tape<T>& t, Var a);
template <typename T> Var tanh(Tape<T>& t, Var a);
/// Row softmax with max subtraction; a vector is a single row.
template <typename T> Var softmax_rows(Tape<T>& t, Var a);

/// Sum of all elements, as a scalar.
template <typename T> Var sum(Tape<T>& t, Var a);

/// Lower clamp applied to the target probability before taking the log.
inline constexpr double kProbabilityFloor = 1e-12;

/// -ln(max(dist[target], 1e-12)) for a probability vector. IndexError on a
/// bad target.
template <typename T> Var cross_entropy(Tape<T>& t, Var dist, std::size_t target);

}  // namespace dualdec::ops
