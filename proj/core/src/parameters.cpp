#include "dualdec/parameters.hpp"

#include <cmath>
#include <random>

#include "dualdec/errors.hpp"

namespace dualdec {

template <typename T>
Parameter<T>& ParameterSet<T>::add(std::string name, Shape shape) {
  if (index_.count(name)) throw ShapeError("duplicate parameter name " + name);
  index_.emplace(name, params_.size());
  params_.push_back(Parameter<T>{std::move(name), Tensor<T>(std::move(shape)), params_.size()});
  return params_.back();
}

template <typename T>
const Parameter<T>* ParameterSet<T>::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

template <typename T>
Parameter<T>* ParameterSet<T>::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

template <typename T>
const Parameter<T>& ParameterSet<T>::get(std::string_view name) const {
  const auto* p = find(name);
  if (!p) throw IndexError("unknown parameter " + std::string(name));
  return *p;
}

template <typename T>
Parameter<T>& ParameterSet<T>::get(std::string_view name) {
  auto* p = find(name);
  if (!p) throw IndexError("unknown parameter " + std::string(name));
  return *p;
}

template <typename T>
std::size_t ParameterSet<T>::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
void ParameterSet<T>::init_uniform(std::uint64_t seed, T scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-static_cast<double>(scale), static_cast<double>(scale));
  for (auto& p : params_) {
    for (auto& v : p.value.values()) v = static_cast<T>(dist(rng));
  }
}

template <typename T>
std::vector<Tensor<T>> ParameterSet<T>::snapshot() const {
  std::vector<Tensor<T>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

template <typename T>
void ParameterSet<T>::restore(const std::vector<Tensor<T>>& values) {
  if (values.size() != params_.size()) throw ShapeError("snapshot size does not match parameter set");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].shape() != params_[i].value.shape()) {
      throw ShapeError("snapshot shape mismatch for " + params_[i].name);
    }
  }
  for (std::size_t i = 0; i < values.size(); ++i) params_[i].value = values[i];
}

template <typename T>
Gradients<T>::Gradients(const ParameterSet<T>& params) {
  names_.reserve(params.size());
  grads_.reserve(params.size());
  for (const auto& p : params) {
    names_.push_back(p.name);
    grads_.emplace_back(p.value.shape());
  }
}

template <typename T>
const Tensor<T>& Gradients<T>::get(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return grads_[i];
  }
  throw IndexError("unknown gradient " + std::string(name));
}

template <typename T>
void Gradients<T>::zero() {
  for (auto& g : grads_) g.fill(T{0});
}

template <typename T>
void Gradients<T>::scale(T factor) {
  for (auto& g : grads_) {
    for (auto& v : g.values()) v *= factor;
  }
}

template <typename T>
void Gradients<T>::add(const Gradients& other) {
  if (other.size() != size()) throw ShapeError("gradient sets differ in size");
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    auto dst = grads_[i].values();
    auto src = other.grads_[i].values();
    if (dst.size() != src.size()) throw ShapeError("gradient shape mismatch for " + names_[i]);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

template <typename T>
double Gradients<T>::global_norm() const {
  double sq = 0.0;
  for (const auto& g : grads_) {
    for (T v : g.values()) sq += static_cast<double>(v) * static_cast<double>(v);
  }
  return std::sqrt(sq);
}

template <typename T>
double Gradients<T>::clip_global_norm(double max_norm) {
  const double norm = global_norm();
  if (norm > max_norm && norm > 0.0) scale(static_cast<T>(max_norm / norm));
  return norm;
}

template <typename T>
bool Gradients<T>::all_finite() const {
  for (const auto& g : grads_) {
    if (!g.all_finite()) return false;
  }
  return true;
}

template <typename T>
std::map<std::string, Tensor<T>> Gradients<T>::by_name() const {
  std::map<std::string, Tensor<T>> out;
  for (std::size_t i = 0; i < names_.size(); ++i) out.emplace(names_[i], grads_[i]);
  return out;
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class Gradients<float>;
template class Gradients<double>;

}  // namespace dualdec
