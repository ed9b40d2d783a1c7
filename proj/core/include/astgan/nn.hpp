#pragma once

// Recurrent building blocks shared by the generator and the discriminator.

#include <string>
#include <utility>
#include <vector>

#include "astgan/autodiff.hpp"
#include "astgan/params.hpp"

namespace astgan {

template <class T>
struct LstmWeights {
  BasicValue<T> W;  // (4H x (input + H)), gate order: input, forget, cell, output
  BasicValue<T> b;  // (4H)
  std::size_t hidden = 0;

  static LstmWeights from(const BasicParameterStore<T>& store, const std::string& prefix) {
    LstmWeights w{store.get(prefix + ".W"), store.get(prefix + ".b"), 0};
    w.hidden = w.b.size() / 4;
    return w;
  }
};

template <class T>
void add_lstm_params(BasicParameterStore<T>& store, const std::string& prefix, std::size_t input,
                     std::size_t hidden, Rng& rng) {
  store.add(prefix + ".W", xavier_uniform_init<T>({4 * hidden, input + hidden}, input + hidden, 4 * hidden, rng));
  store.add(prefix + ".b", BasicValue<T>::zeros({4 * hidden}, true));
}

template <class T>
struct LstmState {
  BasicValue<T> h;
  BasicValue<T> c;
};

template <class T>
LstmState<T> lstm_cell(const LstmWeights<T>& w, const BasicValue<T>& x, const LstmState<T>& prev) {
  const std::size_t H = w.hidden;
  auto z = add(matmul(w.W, concat<T>({x, prev.h})), w.b);
  auto i = sigmoid(slice(z, 0, H));
  auto f = sigmoid(slice(z, H, 2 * H));
  auto g = tanh(slice(z, 2 * H, 3 * H));
  auto o = sigmoid(slice(z, 3 * H, 4 * H));
  auto c = add(mul(f, prev.c), mul(i, g));
  auto h = mul(o, tanh(c));
  return {h, c};
}

template <class T>
LstmState<T> zero_state(std::size_t hidden) {
  return {BasicValue<T>::zeros({hidden}), BasicValue<T>::zeros({hidden})};
}

template <class T>
struct BiEncoding {
  std::vector<BasicValue<T>> states;  // [forward_t : backward_t], 2H each
  BasicValue<T> matrix;               // (n x 2H)
  BasicValue<T> summary;              // states.back()

  std::size_t size() const { return states.size(); }
};

// Bidirectional LSTM over embedded ids.
template <class T>
BiEncoding<T> bilstm_encode(const BasicValue<T>& table, const std::vector<std::size_t>& ids,
                            const LstmWeights<T>& fwd, const LstmWeights<T>& bwd) {
  const std::size_t n = ids.size();
  std::vector<BasicValue<T>> inputs;
  inputs.reserve(n);
  for (std::size_t id : ids) inputs.push_back(embedding_lookup(table, id));

  std::vector<BasicValue<T>> forward(n), backward_states(n);
  LstmState<T> s = zero_state<T>(fwd.hidden);
  for (std::size_t t = 0; t < n; ++t) {
    s = lstm_cell(fwd, inputs[t], s);
    forward[t] = s.h;
  }
  s = zero_state<T>(bwd.hidden);
  for (std::size_t t = n; t-- > 0;) {
    s = lstm_cell(bwd, inputs[t], s);
    backward_states[t] = s.h;
  }
  BiEncoding<T> out;
  out.states.reserve(n);
  for (std::size_t t = 0; t < n; ++t) out.states.push_back(concat<T>({forward[t], backward_states[t]}));
  out.matrix = stack(out.states);
  out.summary = out.states.back();
  return out;
}

}  // namespace astgan
