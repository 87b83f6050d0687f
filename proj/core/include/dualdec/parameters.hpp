#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dualdec/tensor.hpp"

namespace dualdec {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  std::size_t index = 0;  // position inside the owning ParameterSet
};

/// Ordered collection of named tensors. Element addresses are stable for the
/// lifetime of the set, so layers may keep pointers into it.
template <typename T>
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;

  Parameter<T>& add(std::string name, Shape shape);

  const Parameter<T>& at(std::size_t i) const { return params_[i]; }
  Parameter<T>& at(std::size_t i) { return params_[i]; }
  const Parameter<T>* find(std::string_view name) const;
  Parameter<T>* find(std::string_view name);
  /// Throws IndexError for unknown names.
  const Parameter<T>& get(std::string_view name) const;
  Parameter<T>& get(std::string_view name);

  std::size_t size() const { return params_.size(); }
  std::size_t element_count() const;
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }

  /// Uniform initialization in [-scale, scale], parameters visited in order.
  void init_uniform(std::uint64_t seed, T scale);

  std::vector<Tensor<T>> snapshot() const;
  /// Throws ShapeError unless `values` matches the set element for element.
  void restore(const std::vector<Tensor<T>>& values);

 private:
  std::deque<Parameter<T>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Gradient tensors aligned with a ParameterSet.
template <typename T>
class Gradients {
 public:
  explicit Gradients(const ParameterSet<T>& params);

  std::size_t size() const { return grads_.size(); }
  Tensor<T>& operator[](std::size_t i) { return grads_[i]; }
  const Tensor<T>& operator[](std::size_t i) const { return grads_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const Tensor<T>& get(std::string_view name) const;

  void zero();
  void scale(T factor);
  void add(const Gradients& other);
  /// Square root of the sum of squares over every element, accumulated in
  /// double in parameter order.
  double global_norm() const;
  /// Rescales so the global norm is at most `max_norm`; returns the norm
  /// before clipping.
  double clip_global_norm(double max_norm);
  bool all_finite() const;

  std::map<std::string, Tensor<T>> by_name() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<T>> grads_;
};

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;
extern template class Gradients<float>;
extern template class Gradients<double>;

}  // namespace dualdec
