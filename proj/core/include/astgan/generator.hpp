#pragma once

// Grammar-constrained encoder-decoder that scores and produces AST
// construction actions.
//
// Encoder: bidirectional LSTM over utterance tokens, h_t = [fwd_t : bwd_t].
// Decoder: s_t = LSTM([a_{t-1} : c_t : p_t], s_{t-1}) where a_{t-1} embeds the
// previous action, c_t attends over encoder states with a bilinear score
// against s_{t-1}, and p_t is the decoder state of the step that expanded the
// frontier slot's parent (zero at the root). Each step's distribution covers
// only the actions legal at the frontier. Token steps mix a vocabulary softmax
// and a pointer distribution over input positions through a learned gate.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "astgan/autodiff.hpp"
#include "astgan/corpus.hpp"
#include "astgan/grammar.hpp"
#include "astgan/nn.hpp"
#include "astgan/params.hpp"
#include "astgan/rng.hpp"
#include "astgan/transition.hpp"

namespace astgan {

struct ModelDims {
  std::size_t embed_size = 64;
  std::size_t hidden_size = 128;
  std::size_t max_input_len = 40;
};

template <class T>
using EncoderStates = BiEncoding<T>;

template <class T>
struct Attention {
  BasicValue<T> weights;  // (n), sums to 1
  BasicValue<T> context;  // (2H)
};

template <class T>
struct Hypothesis {
  FrontierState frontier;
  std::vector<Action> actions;
  std::vector<std::size_t> action_ids;
  double log_prob = 0.0;
  LstmState<T> state;
  BasicValue<T> prev_action;
  std::vector<BasicValue<T>> step_states;  // s_t of every applied action

  bool complete() const { return frontier.complete(); }
};

template <class T>
struct DecoderStep {
  LstmState<T> state;  // s_t and its cell
  BasicValue<T> context;
  BasicValue<T> parent_feed;
  std::vector<std::size_t> legal;  // ascending action indices
  BasicValue<T> log_probs;         // one entry per legal action
  std::optional<double> copy_gate;  // vocabulary weight on token steps with copy candidates

  std::vector<double> probabilities() const;
};

template <class T>
struct SampleResult {
  std::vector<Action> actions;
  std::vector<BasicValue<T>> step_log_probs;
  BasicValue<T> log_prob;  // sum of step_log_probs; zero scalar when empty
  bool complete = false;
};

struct BeamCandidate {
  std::vector<Action> actions;
  std::vector<std::size_t> action_ids;
  double log_prob = 0.0;
  std::size_t completed_at = 0;
};

template <class T>
class BasicGenerator {
 public:
  BasicGenerator(const Grammar& g, const Vocabulary& nl_vocab, const ActionSpace& space, ModelDims dims,
                 const BasicParameterStore<T>& params);

  static void init_params(BasicParameterStore<T>& store, const Grammar& g, const Vocabulary& nl_vocab,
                          const ActionSpace& space, ModelDims dims, Rng& rng);

  EncoderStates<T> encode(const std::vector<std::string>& nl) const;
  Attention<T> attend(const BasicValue<T>& s, const EncoderStates<T>& enc) const;

  Hypothesis<T> initial_hypothesis(const EncoderStates<T>& enc) const;
  DecoderStep<T> decode_step(const Hypothesis<T>& prev, const EncoderStates<T>& enc,
                             const std::vector<std::string>& nl) const;
  Hypothesis<T> advance(const Hypothesis<T>& prev, const DecoderStep<T>& step, std::size_t choice,
                        const std::vector<std::string>& nl) const;

  // Sum over steps of log p(gold action | history, utterance, grammar). With
  // require_complete = false a derivation prefix is scored as well.
  BasicValue<T> sequence_log_prob(const std::vector<std::string>& nl, const std::vector<Action>& actions,
                                  bool require_complete = true) const;

  SampleResult<T> sample(const std::vector<std::string>& nl, Rng& rng, std::size_t max_steps) const;
  std::optional<BeamCandidate> greedy(const std::vector<std::string>& nl, std::size_t max_steps) const;
  // Complete hypotheses, best first: higher log-probability, then earlier
  // completion, then lexicographically smaller action ids.
  std::vector<BeamCandidate> beam_search(const std::vector<std::string>& nl, std::size_t beam_width,
                                         std::size_t max_steps) const;

  const Grammar& grammar() const { return *g_; }
  const ActionSpace& action_space() const { return *space_; }
  const ModelDims& dims() const { return dims_; }

 private:
  BasicValue<T> action_embedding(const Action& a, std::size_t index) const;

  const Grammar* g_;
  const Vocabulary* nl_vocab_;
  const ActionSpace* space_;
  ModelDims dims_;

  BasicValue<T> nl_embed_;
  LstmWeights<T> enc_fwd_, enc_bwd_;
  BasicValue<T> init_W_, init_b_;
  BasicValue<T> action_embed_;
  LstmWeights<T> dec_;
  BasicValue<T> att_W_;
  BasicValue<T> rule_W_, rule_b_;
  BasicValue<T> vocab_W_, vocab_b_;
  BasicValue<T> gate_w_, gate_b_;
  BasicValue<T> ptr_W_;
};

using Generator = BasicGenerator<float>;

extern template class BasicGenerator<float>;
extern template class BasicGenerator<double>;

}  // namespace astgan
