#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "astgan/autodiff.hpp"
#include "astgan/rng.hpp"

namespace astgan {

// Named trainable arrays. Iteration follows insertion order.
template <class T>
class BasicParameterStore {
 public:
  using value_type = BasicValue<T>;

  BasicParameterStore() = default;
  explicit BasicParameterStore(std::uint64_t seed) : rng_seed(seed) {}

  value_type& add(const std::string& name, value_type value) {
    if (index_.contains(name)) throw std::invalid_argument("parameter '" + name + "' already exists");
    if (!value.requires_grad()) {
      value = value_type::leaf(value.shape(), std::vector<T>(value.data().begin(), value.data().end()), true);
    }
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, std::move(value));
    return entries_.back().second;
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  const value_type& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
    return entries_[it->second].second;
  }
  value_type& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
    return entries_[it->second].second;
  }

  const std::vector<std::pair<std::string, value_type>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, value_type>>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t num_scalars() const {
    std::size_t n = 0;
    for (const auto& [_, v] : entries_) n += v.size();
    return n;
  }

  void zero_grad() {
    for (auto& [_, v] : entries_) v.zero_grad();
  }

  // Deep copy into another scalar type; used to evaluate float models in
  // double precision.
  template <class U>
  BasicParameterStore<U> cast() const {
    BasicParameterStore<U> out(rng_seed);
    for (const auto& [name, v] : entries_) {
      std::vector<U> data(v.data().begin(), v.data().end());
      out.add(name, BasicValue<U>::leaf(v.shape(), std::move(data), true));
    }
    return out;
  }

  BasicParameterStore clone() const { return cast<T>(); }

  std::uint64_t rng_seed = 0;

 private:
  std::vector<std::pair<std::string, value_type>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

using ParameterStore = BasicParameterStore<float>;

// Uniform on [-a, a] with a = sqrt(6 / (fan_in + fan_out)).
inline double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  if (fan_in == 0 || fan_out == 0) throw std::invalid_argument("xavier_uniform: fan_in and fan_out must be >= 1");
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <class T = float>
BasicValue<T> xavier_uniform_init(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = xavier_bound(fan_in, fan_out);
  std::vector<T> data(numel(shape));
  for (auto& x : data) x = static_cast<T>(rng.uniform(-a, a));
  return BasicValue<T>::leaf(std::move(shape), std::move(data), true);
}

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::uint64_t t = 0;
  std::unordered_map<std::string, std::vector<float>> m;
  std::unordered_map<std::string, std::vector<float>> v;

  template <class T>
  static AdamState for_store(const BasicParameterStore<T>& store, AdamOptions options = {}) {
    AdamState s;
    s.options = options;
    for (const auto& [name, value] : store.entries()) {
      s.m.emplace(name, std::vector<float>(value.size(), 0.0f));
      s.v.emplace(name, std::vector<float>(value.size(), 0.0f));
    }
    return s;
  }
};

// One bias-corrected Adam update over every entry, then zeroes gradients.
template <class T>
void adam_step(BasicParameterStore<T>& params, AdamState& state) {
  state.t += 1;
  const auto& o = state.options;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.t));
  for (auto& [name, value] : params.entries()) {
    auto mit = state.m.find(name);
    auto vit = state.v.find(name);
    if (mit == state.m.end() || vit == state.v.end() || mit->second.size() != value.size()) {
      throw std::logic_error("adam_step: no optimizer state for parameter '" + name + "'");
    }
    auto& m = mit->second;
    auto& v = vit->second;
    auto data = value.mutable_data();
    auto grad = value.mutable_grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = grad[i];
      m[i] = static_cast<float>(o.beta1 * m[i] + (1.0 - o.beta1) * g);
      v[i] = static_cast<float>(o.beta2 * v[i] + (1.0 - o.beta2) * g * g);
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      data[i] = static_cast<T>(data[i] - o.lr * mhat / (std::sqrt(vhat) + o.eps));
      grad[i] = T{0};
    }
  }
}

}  // namespace astgan
