#include "dualdec/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dualdec/errors.hpp"

namespace dualdec::ops {

namespace {

template <typename T>
void require_same_shape(const Tape<T>& t, Var a, Var b, const char* op) {
  if (t.value(a).shape() != t.value(b).shape()) {
    throw ShapeError(std::string(op) + ": shape " + shape_string(t.value(a).shape()) + " vs " +
                     shape_string(t.value(b).shape()));
  }
}

template <typename T>
void require_rank(const Tape<T>& t, Var a, std::size_t rank, const char* op) {
  if (t.value(a).rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     shape_string(t.value(a).shape()));
  }
}

}  // namespace

template <typename T>
Var matmul(Tape<T>& t, Var a, Var b) {
  const Tensor<T>& A = t.value(a);
  const Tensor<T>& B = t.value(b);

  if (A.rank() == 2 && B.rank() == 2) {
    const std::size_t m = A.shape()[0], k = A.shape()[1], n = B.shape()[1];
    if (B.shape()[0] != k) {
      throw ShapeError("matmul: " + shape_string(A.shape()) + " x " + shape_string(B.shape()));
    }
    Tensor<T> out(Shape{m, n});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const T aip = A[i * k + p];
        const T* brow = B.data() + p * n;
        T* orow = out.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
      }
    }
    return t.record(std::move(out), "matmul", [a, b, m, k, n](Tape<T>& tp, Var self) {
      const Tensor<T>& G = tp.grad(self);
      const Tensor<T>& A = tp.value(a);
      const Tensor<T>& B = tp.value(b);
      Tensor<T>& gA = tp.grad(a);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          T acc{0};
          for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * B[p * n + j];
          gA[i * k + p] += acc;
        }
      }
      Tensor<T>& gB = tp.grad(b);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const T aip = A[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gB[p * n + j] += aip * G[i * n + j];
        }
      }
    });
  }

  if (A.rank() == 2 && B.rank() == 1) {
    const std::size_t m = A.shape()[0], k = A.shape()[1];
    if (B.shape()[0] != k) {
      throw ShapeError("matmul: " + shape_string(A.shape()) + " x " + shape_string(B.shape()));
    }
    Tensor<T> out(Shape{m});
    for (std::size_t i = 0; i < m; ++i) {
      const T* arow = A.data() + i * k;
      T acc{0};
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * B[p];
      out[i] = acc;
    }
    return t.record(std::move(out), "matvec", [a, b, m, k](Tape<T>& tp, Var self) {
      const Tensor<T>& g = tp.grad(self);
      const Tensor<T>& A = tp.value(a);
      const Tensor<T>& x = tp.value(b);
      Tensor<T>& gA = tp.grad(a);
      for (std::size_t i = 0; i < m; ++i) {
        const T gi = g[i];
        if (gi == T{0}) continue;
        T* row = gA.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) row[p] += gi * x[p];
      }
      Tensor<T>& gx = tp.grad(b);
      for (std::size_t i = 0; i < m; ++i) {
        const T gi = g[i];
        if (gi == T{0}) continue;
        const T* arow = A.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) gx[p] += arow[p] * gi;
      }
    });
  }

  if (A.rank() == 1 && B.rank() == 2) {
    const std::size_t k = B.shape()[0], n = B.shape()[1];
    if (A.shape()[0] != k) {
      throw ShapeError("matmul: " + shape_string(A.shape()) + " x " + shape_string(B.shape()));
    }
    Tensor<T> out(Shape{n});
    for (std::size_t p = 0; p < k; ++p) {
      const T ap = A[p];
      const T* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) out[j] += ap * brow[j];
    }
    return t.record(std::move(out), "vecmat", [a, b, k, n](Tape<T>& tp, Var self) {
      const Tensor<T>& g = tp.grad(self);
      const Tensor<T>& x = tp.value(a);
      const Tensor<T>& B = tp.value(b);
      Tensor<T>& gx = tp.grad(a);
      for (std::size_t p = 0; p < k; ++p) {
        const T* brow = B.data() + p * n;
        T acc{0};
        for (std::size_t j = 0; j < n; ++j) acc += brow[j] * g[j];
        gx[p] += acc;
      }
      Tensor<T>& gB = tp.grad(b);
      for (std::size_t p = 0; p < k; ++p) {
        const T xp = x[p];
        T* row = gB.data() + p * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += xp * g[j];
      }
    });
  }

  throw ShapeError("matmul: unsupported operand shapes " + shape_string(A.shape()) + " x " +
                   shape_string(B.shape()));
}

template <typename T>
Var add(Tape<T>& t, Var a, Var b) {
  require_same_shape(t, a, b, "add");
  Tensor<T> out = t.value(a);
  const Tensor<T>& B = t.value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  return t.record(std::move(out), "add", [a, b](Tape<T>& tp, Var self) {
    const Tensor<T>& g = tp.grad(self);
    Tensor<T>& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    Tensor<T>& gb = tp.grad(b);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
  });
}

template <typename T>
Var sub(Tape<T>& t, Var a, Var b) {
  require_same_shape(t, a, b, "sub");
  Tensor<T> out = t.value(a);
  const Tensor<T>& B = t.value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  return t.record(std::move(out), "sub", [a, b](Tape<T>& tp, Var self) {
    const Tensor<T>& g = tp.grad(self);
    Tensor<T>& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    Tensor<T>& gb = tp.grad(b);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
  });
}

template <typename T>
Var mul(Tape<T>& t, Var a, Var b) {
  require_same_shape(t, a, b, "mul");
  Tensor<T> out = t.value(a);
  const Tensor<T>& B = t.value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  return t.record(std::move(out), "mul", [a, b](Tape<T>& tp, Var self) {
    const Tensor<T>& g = tp.grad(self);
    const Tensor<T>& A = tp.value(a);
    const Tensor<T>& B = tp.value(b);
    Tensor<T>& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    Tensor<T>& gb = tp.grad(b);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
  });
}

template <typename T>
Var scale(Tape<T>& t, Var a, T factor) {
  Tensor<T> out = t.value(a);
  for (auto& v : out.values()) v *= factor;
  return t.record(std::move(out), "scale", [a, factor](Tape<T>& tp, Var self) {
    const Tensor<T>& g = tp.grad(self);
    Tensor<T>& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

template <typename T>
Var one_minus(Tape<T>& t, Var a) {
  Tensor<T> out = t.value(a);
  for (auto& v : out.values()) v = T{1} - v;
  return t.record(std::move(out), "one_minus", [a](Tape<T>& tp, Var self) {
    const Tensor<T>& g = tp.grad(self);
    Tensor<T>& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
  });
}

template <typename T>
Var add_rowwise(Tape<T>& t, Var m, Var row) {
  require_rank(t, m, 2, "add_rowwise");
  require_rank(t, row, 1, "add_rowwise");
  const std::size_t n = t.value(m).shape()[0], d = t.value(m).shape()[1];
  if (t.value(row).size() != d) {
    throw ShapeError("add_rowwise: row of size " + std::to_string(t.value(row).size()) +
                     " for matrix " + shape_string(t.value(m).shape()));
  }
  Tensor<T> out = t.value(m);
  const Tensor<T>& r = t.value(row);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] += r[j];
  }
  return t.record(std::move(out), "add_rowwise", [m, row, n, d](Tape<T>& tp, Var self) {
    const Tensor<T>& g = tp.grad(self);
    Tensor<T>& gm = tp.grad(m);
    for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
    Tensor<T>& gr = tp.grad(row);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) gr[j] += g[i * d + j];
    }
  });
}

template <typename T>
Var add_n(Tape<T>& t, std::span<const Var> xs) {
  if (xs.empty()) throw ShapeError("add_n: no operands");
  Tensor<T> out = t.value(xs[0]);
  for (std::size_t k = 1; k < xs.size(); ++k) {
    require_same_shape(t, xs[0], xs[k], "add_n");
    const Tensor<T>& x = t.value(xs[k]);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += x[i];
  }
  std::vector<Var> inputs(xs.begin(), xs.end());
  return t.record(std::move(out), "add_n", [inputs = std::move(inputs)](Tape<T>& tp, Var self) {
    const Tensor<T> g = tp.grad(self);
    for (Var x : inputs) {
      Tensor<T>& gx = tp.grad(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

template <typename T>
Var concat(Tape<T>& t, std::span<const Var> xs) {
  std::vector<Var> inputs(xs.begin(), xs.end());
  std::vector<std::size_t> sizes;
  std::vector<T> data;
  for (Var x : inputs) {
    require_rank(t, x, 1, "concat");
    const Tensor<T>& v = t.value(x);
    sizes.push_back(v.size());
    data.insert(data.end(), v.values().begin(), v.values().end());
  }
  const std::size_t total = data.size();
  return t.record(Tensor<T>(Shape{total}, std::move(data)), "concat",
                  [inputs = std::move(inputs), sizes = std::move(sizes)](Tape<T>& tp, Var self) {
                    const Tensor<T> g = tp.grad(self);
                    std::size_t offset = 0;
                    for (std::size_t k = 0; k < inputs.size(); ++k) {
                      Tensor<T>& gx = tp.grad(inputs[k]);
                      for (std::size_t i = 0; i < sizes[k]; ++i) gx[i] += g[offset + i];
                      offset += sizes[k];
                    }
                  });
}

template <typename T>
Var slice(Tape<T>& t, Var a, std::size_t begin, std::size_t length) {
  require_rank(t, a, 1, "slice");
  const Tensor<T>& A = t.value(a);
  if (begin + length > A.size()) {
    throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(begin + length) +
                     ") out of range for size " + std::to_string(A.size()));
  }
  std::vector<T> data(A.values().begin() + static_cast<std::ptrdiff_t>(begin),
                      A.values().begin() + static_cast<std::ptrdiff_t>(begin + length));
  return t.record(Tensor<T>(Shape{length}, std::move(data)), "slice",
                  [a, begin, length](Tape<T>& tp, Var self) {
                    const Tensor<T>& g = tp.grad(self);
                    Tensor<T>& ga = tp.grad(a);
                    for (std::size_t i = 0; i < length; ++i) ga[begin + i] += g[i];
                  });
}

template <typename T>
Var stack_rows(Tape<T>& t, std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  std::vector<Var> inputs(rows.begin(), rows.end());
  const std::size_t d = t.value(inputs[0]).size();
  std::vector<T> data;
  data.reserve(d * inputs.size());
  for (Var r : inputs) {
    require_rank(t, r, 1, "stack_rows");
    if (t.value(r).size() != d) throw ShapeError("stack_rows: rows differ in size");
    const auto v = t.value(r).values();
    data.insert(data.end(), v.begin(), v.end());
  }
  const std::size_t n = inputs.size();
  return t.record(Tensor<T>(Shape{n, d}, std::move(data)), "stack_rows",
                  [inputs = std::move(inputs), d](Tape<T>& tp, Var self) {
                    const Tensor<T> g = tp.grad(self);
                    for (std::size_t i = 0; i < inputs.size(); ++i) {
                      Tensor<T>& gr = tp.grad(inputs[i]);
                      for (std::size_t j = 0; j < d; ++j) gr[j] += g[i * d + j];
                    }
                  });
}

template <typename T>
Var gather_row(Tape<T>& t, Var table, std::size_t index) {
  require_rank(t, table, 2, "gather_row");
  const Tensor<T>& M = t.value(table);
  const std::size_t rows = M.shape()[0], d = M.shape()[1];
  if (index >= rows) {
    throw IndexError("gather_row: index " + std::to_string(index) + " for table with " +
                     std::to_string(rows) + " rows");
  }
  std::vector<T> data(M.data() + index * d, M.data() + (index + 1) * d);
  return t.record(Tensor<T>(Shape{d}, std::move(data)), "gather_row",
                  [table, index, d](Tape<T>& tp, Var self) {
                    const Tensor<T>& g = tp.grad(self);
                    Tensor<T>& gt = tp.grad(table);
                    for (std::size_t j = 0; j < d; ++j) gt[index * d + j] += g[j];
                  });
}

template <typename T>
Var sigmoid(Tape<T>& t, Var a) {
  Tensor<T> out = t.value(a);
  for (auto& v : out.values()) v = T{1} / (T{1} + std::exp(-v));
  return t.record(std::move(out), "sigmoid", [a](Tape<T>& tp, Var self) {
    const Tensor<T>& g = tp.grad(self);
    const Tensor<T>& y = tp.value(self);
    Tensor<T>& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (T{1} - y[i]);
  });
}

template <typename T>
Var tanh(Tape<T>& t, Var a) {
  Tensor<T> out = t.value(a);
  for (auto& v : out.values()) v = std::tanh(v);
  return t.record(std::move(out), "tanh", [a](Tape<T>& tp, Var self) {
    const Tensor<T>& g = tp.grad(self);
    const Tensor<T>& y = tp.value(self);
    Tensor<T>& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (T{1} - y[i] * y[i]);
  });
}

template <typename T>
Var softmax_rows(Tape<T>& t, Var a) {
  const Tensor<T>& A = t.value(a);
  if (A.rank() != 1 && A.rank() != 2) {
    throw ShapeError("softmax_rows: unsupported shape " + shape_string(A.shape()));
  }
  const std::size_t rows = A.rows(), cols = A.cols();
  if (cols == 0) throw ShapeError("softmax_rows: empty rows");
  Tensor<T> out(A.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = A.data() + r * cols;
    T* o = out.data() + r * cols;
    const T mx = *std::max_element(in, in + cols);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = std::exp(static_cast<double>(in[j] - mx));
      o[j] = static_cast<T>(e);
      total += e;
    }
    for (std::size_t j = 0; j < cols; ++j) o[j] = static_cast<T>(static_cast<double>(o[j]) / total);
  }
  return t.record(std::move(out), "softmax_rows", [a, rows, cols](Tape<T>& tp, Var self) {
    const Tensor<T>& g = tp.grad(self);
    const Tensor<T>& y = tp.value(self);
    Tensor<T>& ga = tp.grad(a);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * cols;
      T dot{0};
      for (std::size_t j = 0; j < cols; ++j) dot += g[base + j] * y[base + j];
      for (std::size_t j = 0; j < cols; ++j) ga[base + j] += y[base + j] * (g[base + j] - dot);
    }
  });
}

template <typename T>
Var sum(Tape<T>& t, Var a) {
  T total{0};
  for (T v : t.value(a).values()) total += v;
  return t.record(Tensor<T>::scalar(total), "sum", [a](Tape<T>& tp, Var self) {
    const T g = tp.grad(self)[0];
    for (auto& v : tp.grad(a).values()) v += g;
  });
}

template <typename T>
Var cross_entropy(Tape<T>& t, Var dist, std::size_t target) {
  require_rank(t, dist, 1, "cross_entropy");
  const Tensor<T>& p = t.value(dist);
  if (target >= p.size()) {
    throw IndexError("cross_entropy: target " + std::to_string(target) + " for distribution of size " +
                     std::to_string(p.size()));
  }
  const T floor = static_cast<T>(kProbabilityFloor);
  const T pt = p[target];
  const bool clamped = !(pt >= floor);
  const T loss = -std::log(clamped ? floor : pt);
  return t.record(Tensor<T>::scalar(loss), "cross_entropy",
                  [dist, target, clamped](Tape<T>& tp, Var self) {
                    if (clamped) return;
                    const T g = tp.grad(self)[0];
                    const T pt = tp.value(dist)[target];
                    tp.grad(dist)[target] -= g / pt;
                  });
}

#define DUALDEC_INSTANTIATE_OPS(T)                                          \
  template Var matmul<T>(Tape<T>&, Var, Var);                               \
  template Var add<T>(Tape<T>&, Var, Var);                                  \
  template Var sub<T>(Tape<T>&, Var, Var);                                  \
  template Var mul<T>(Tape<T>&, Var, Var);                                  \
  template Var scale<T>(Tape<T>&, Var, T);                                  \
  template Var one_minus<T>(Tape<T>&, Var);                                 \
  template Var add_rowwise<T>(Tape<T>&, Var, Var);                          \
  template Var add_n<T>(Tape<T>&, std::span<const Var>);                    \
  template Var concat<T>(Tape<T>&, std::span<const Var>);                   \
  template Var slice<T>(Tape<T>&, Var, std::size_t, std::size_t);           \
  template Var stack_rows<T>(Tape<T>&, std::span<const Var>);               \
  template Var gather_row<T>(Tape<T>&, Var, std::size_t);                   \
  template Var sigmoid<T>(Tape<T>&, Var);                                   \
  template Var tanh<T>(Tape<T>&, Var);                                      \
  template Var softmax_rows<T>(Tape<T>&, Var);                              \
  template Var sum<T>(Tape<T>&, Var);                                       \
  template Var cross_entropy<T>(Tape<T>&, Var, std::size_t);

DUALDEC_INSTANTIATE_OPS(float)
DUALDEC_INSTANTIATE_OPS(double)

#undef DUALDEC_INSTANTIATE_OPS

}  // namespace dualdec::ops
