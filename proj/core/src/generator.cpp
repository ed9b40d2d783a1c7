#include "astgan/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace astgan {

namespace {

constexpr double kProbFloor = 1e-30;

std::vector<std::size_t> legal_indices(const std::vector<bool>& mask) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(i);
  }
  return out;
}

bool candidate_less(const BeamCandidate& a, const BeamCandidate& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  if (a.completed_at != b.completed_at) return a.completed_at < b.completed_at;
  return a.action_ids < b.action_ids;
}

}  // namespace

template <class T>
std::vector<double> DecoderStep<T>::probabilities() const {
  std::vector<double> out;
  out.reserve(log_probs.size());
  for (T v : log_probs.data()) out.push_back(std::exp(static_cast<double>(v)));
  return out;
}

template <class T>
BasicGenerator<T>::BasicGenerator(const Grammar& g, const Vocabulary& nl_vocab, const ActionSpace& space,
                                  ModelDims dims, const BasicParameterStore<T>& params)
    : g_(&g), nl_vocab_(&nl_vocab), space_(&space), dims_(dims) {
  nl_embed_ = params.get("gen.nl_embed");
  enc_fwd_ = LstmWeights<T>::from(params, "gen.enc_fwd");
  enc_bwd_ = LstmWeights<T>::from(params, "gen.enc_bwd");
  init_W_ = params.get("gen.init.W");
  init_b_ = params.get("gen.init.b");
  action_embed_ = params.get("gen.action_embed");
  dec_ = LstmWeights<T>::from(params, "gen.dec");
  att_W_ = params.get("gen.att.W");
  rule_W_ = params.get("gen.rule.W");
  rule_b_ = params.get("gen.rule.b");
  vocab_W_ = params.get("gen.vocab.W");
  vocab_b_ = params.get("gen.vocab.b");
  gate_w_ = params.get("gen.gate.w");
  gate_b_ = params.get("gen.gate.b");
  ptr_W_ = params.get("gen.ptr.W");
  if (nl_embed_.dim(0) != nl_vocab.size() || rule_W_.dim(0) != space.num_productions() ||
      vocab_W_.dim(0) != space.vocab_size() + 1) {
    throw std::invalid_argument("generator parameters do not match the vocabularies");
  }
}

template <class T>
void BasicGenerator<T>::init_params(BasicParameterStore<T>& store, const Grammar& g, const Vocabulary& nl_vocab,
                                    const ActionSpace& space, ModelDims dims, Rng& rng) {
  (void)g;
  const std::size_t E = dims.embed_size;
  const std::size_t H = dims.hidden_size;
  const std::size_t P = space.num_productions();
  const std::size_t V = space.vocab_size();
  store.add("gen.nl_embed", xavier_uniform_init<T>({nl_vocab.size(), E}, nl_vocab.size(), E, rng));
  add_lstm_params(store, "gen.enc_fwd", E, H, rng);
  add_lstm_params(store, "gen.enc_bwd", E, H, rng);
  store.add("gen.init.W", xavier_uniform_init<T>({H, 2 * H}, 2 * H, H, rng));
  store.add("gen.init.b", BasicValue<T>::zeros({H}, true));
  store.add("gen.action_embed", xavier_uniform_init<T>({P + V + 2, E}, P + V + 2, E, rng));
  add_lstm_params(store, "gen.dec", E + 2 * H + H, H, rng);
  store.add("gen.att.W", xavier_uniform_init<T>({2 * H, H}, H, 2 * H, rng));
  store.add("gen.rule.W", xavier_uniform_init<T>({P, H}, H, P, rng));
  store.add("gen.rule.b", BasicValue<T>::zeros({P}, true));
  store.add("gen.vocab.W", xavier_uniform_init<T>({V + 1, H}, H, V + 1, rng));
  store.add("gen.vocab.b", BasicValue<T>::zeros({V + 1}, true));
  store.add("gen.gate.w", xavier_uniform_init<T>({H}, H, 1, rng));
  store.add("gen.gate.b", BasicValue<T>::zeros({}, true));
  store.add("gen.ptr.W", xavier_uniform_init<T>({2 * H, H}, H, 2 * H, rng));
}

template <class T>
EncoderStates<T> BasicGenerator<T>::encode(const std::vector<std::string>& nl) const {
  if (nl.empty()) throw std::invalid_argument("encode: empty utterance");
  if (nl.size() > dims_.max_input_len) {
    throw std::invalid_argument("encode: utterance has " + std::to_string(nl.size()) + " tokens, limit is " +
                                std::to_string(dims_.max_input_len));
  }
  return bilstm_encode(nl_embed_, nl_vocab_->encode(nl), enc_fwd_, enc_bwd_);
}

template <class T>
Attention<T> BasicGenerator<T>::attend(const BasicValue<T>& s, const EncoderStates<T>& enc) const {
  auto scores = matmul(enc.matrix, matmul(att_W_, s));
  auto weights = softmax(scores);
  return {weights, matmul(weights, enc.matrix)};
}

template <class T>
Hypothesis<T> BasicGenerator<T>::initial_hypothesis(const EncoderStates<T>& enc) const {
  Hypothesis<T> h;
  h.frontier = FrontierState::initial(*g_);
  h.state.h = tanh(add(matmul(init_W_, enc.summary), init_b_));
  h.state.c = BasicValue<T>::zeros({dims_.hidden_size});
  h.prev_action = BasicValue<T>::zeros({dims_.embed_size});
  return h;
}

template <class T>
BasicValue<T> BasicGenerator<T>::action_embedding(const Action& a, std::size_t index) const {
  const std::size_t P = space_->num_productions();
  const std::size_t V = space_->vocab_size();
  std::size_t row;
  if (space_->is_rule_index(index)) {
    row = index;
  } else if (space_->is_vocab_index(index)) {
    row = index;  // P + vocab position
  } else if (a.is_end()) {
    row = P + V;
  } else {
    row = P + V + 1;  // copied out-of-vocabulary token
  }
  return embedding_lookup(action_embed_, row);
}

template <class T>
DecoderStep<T> BasicGenerator<T>::decode_step(const Hypothesis<T>& prev, const EncoderStates<T>& enc,
                                              const std::vector<std::string>& nl) const {
  if (prev.complete()) throw std::logic_error("decode_step: hypothesis is complete");
  const FrontierSlot& slot = prev.frontier.top();

  DecoderStep<T> out;
  out.context = attend(prev.state.h, enc).context;
  out.parent_feed = slot.parent_step < 0 ? BasicValue<T>::zeros({dims_.hidden_size})
                                         : prev.step_states.at(static_cast<std::size_t>(slot.parent_step));
  out.state = lstm_cell(dec_, concat<T>({prev.prev_action, out.context, out.parent_feed}),
                        prev.state);
  out.legal = legal_indices(legal_action_mask(prev.frontier, *g_, *space_, nl));
  const auto& s = out.state.h;

  if (!slot.is_token()) {
    auto logits = add(matmul(rule_W_, s), rule_b_);
    out.log_probs = log_softmax(gather(logits, out.legal));
    return out;
  }

  const std::size_t P = space_->num_productions();
  const std::size_t K = out.legal.size();
  // Vocabulary side: legal vocabulary entries and the end token.
  std::vector<std::size_t> vocab_rows, vocab_cols;
  std::vector<std::string> legal_tokens(K);
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t idx = out.legal[k];
    if (space_->is_vocab_index(idx) || idx == space_->end_index()) {
      vocab_rows.push_back(idx - P);
      vocab_cols.push_back(k);
    }
    legal_tokens[k] = space_->action_at(idx, nl).token;
  }
  // Copy side: every copyable input position, merged onto the legal entry
  // carrying the same token.
  std::vector<std::size_t> positions;
  for (std::size_t pos : copyable_positions(nl)) {
    if (pos < enc.size()) positions.push_back(pos);
  }

  BasicValue<T> vocab_part, copy_part;
  if (!vocab_rows.empty()) {
    auto logits = add(matmul(vocab_W_, s), vocab_b_);
    auto dist = softmax(gather(logits, vocab_rows));
    std::vector<T> m(vocab_rows.size() * K, T{0});
    for (std::size_t j = 0; j < vocab_cols.size(); ++j) m[j * K + vocab_cols[j]] = T{1};
    vocab_part = matmul(dist, BasicValue<T>::constant({vocab_rows.size(), K}, std::move(m)));
  }
  if (!positions.empty()) {
    auto scores = matmul(enc.matrix, matmul(ptr_W_, s));
    auto dist = softmax(gather(scores, positions));
    std::vector<T> m(positions.size() * K, T{0});
    for (std::size_t e = 0; e < positions.size(); ++e) {
      for (std::size_t k = 0; k < K; ++k) {
        if (legal_tokens[k] == nl[positions[e]]) m[e * K + k] = T{1};
      }
    }
    copy_part = matmul(dist, BasicValue<T>::constant({positions.size(), K}, std::move(m)));
  }

  BasicValue<T> probs;
  if (vocab_part && copy_part) {
    auto z = add(dot(gate_w_, s), gate_b_);
    auto gate = sigmoid(z);
    out.copy_gate = static_cast<double>(gate.item());
    probs = add(mul(gate, vocab_part), mul(sigmoid(neg(z)), copy_part));
  } else {
    probs = vocab_part ? vocab_part : copy_part;
  }
  out.log_probs = log(add(probs, BasicValue<T>::scalar(static_cast<T>(kProbFloor))));
  return out;
}

template <class T>
Hypothesis<T> BasicGenerator<T>::advance(const Hypothesis<T>& prev, const DecoderStep<T>& step, std::size_t choice,
                                         const std::vector<std::string>& nl) const {
  const std::size_t idx = step.legal.at(choice);
  Action a = space_->action_at(idx, nl);
  Hypothesis<T> next = prev;
  next.frontier.apply(a, *g_);
  next.log_prob += static_cast<double>(step.log_probs[choice]);
  next.state = step.state;
  next.step_states.push_back(step.state.h);
  next.prev_action = action_embedding(a, idx);
  next.actions.push_back(std::move(a));
  next.action_ids.push_back(idx);
  return next;
}

template <class T>
BasicValue<T> BasicGenerator<T>::sequence_log_prob(const std::vector<std::string>& nl,
                                                   const std::vector<Action>& actions, bool require_complete) const {
  auto enc = encode(nl);
  Hypothesis<T> hyp = initial_hypothesis(enc);
  std::vector<BasicValue<T>> terms;
  terms.reserve(actions.size());
  for (std::size_t t = 0; t < actions.size(); ++t) {
    if (hyp.complete()) {
      throw TrailingActionsError(std::to_string(actions.size() - t) + " action(s) after the derivation completed");
    }
    auto step = decode_step(hyp, enc, nl);
    std::size_t idx;
    try {
      idx = space_->index_of(actions[t], nl);
    } catch (const std::invalid_argument& e) {
      throw IllegalActionError(t, e.what());
    }
    auto it = std::lower_bound(step.legal.begin(), step.legal.end(), idx);
    if (it == step.legal.end() || *it != idx) {
      throw IllegalActionError(t, to_string(actions[t], *g_) + " is not legal at the frontier");
    }
    const auto k = static_cast<std::size_t>(it - step.legal.begin());
    terms.push_back(gather(step.log_probs, {k}));
    hyp = advance(hyp, step, k, nl);
  }
  if (require_complete && !hyp.complete()) {
    throw IncompleteDerivationError("gold derivation leaves pending frontier slots");
  }
  if (terms.empty()) return BasicValue<T>::scalar(T{0});
  return sum(concat(terms));
}

template <class T>
SampleResult<T> BasicGenerator<T>::sample(const std::vector<std::string>& nl, Rng& rng,
                                          std::size_t max_steps) const {
  if (max_steps == 0) throw std::invalid_argument("sample: max_steps must be at least 1");
  auto enc = encode(nl);
  Hypothesis<T> hyp = initial_hypothesis(enc);
  SampleResult<T> out;
  while (!hyp.complete() && out.actions.size() < max_steps) {
    auto step = decode_step(hyp, enc, nl);
    const std::size_t k = rng.categorical(step.probabilities());
    out.step_log_probs.push_back(gather(step.log_probs, {k}));
    hyp = advance(hyp, step, k, nl);
    out.actions.push_back(hyp.actions.back());
  }
  out.complete = hyp.complete();
  out.log_prob = out.step_log_probs.empty() ? BasicValue<T>::scalar(T{0}) : sum(concat(out.step_log_probs));
  return out;
}

template <class T>
std::optional<BeamCandidate> BasicGenerator<T>::greedy(const std::vector<std::string>& nl,
                                                       std::size_t max_steps) const {
  NoGradGuard guard;
  auto enc = encode(nl);
  Hypothesis<T> hyp = initial_hypothesis(enc);
  while (!hyp.complete() && hyp.actions.size() < max_steps) {
    auto step = decode_step(hyp, enc, nl);
    const auto lp = step.log_probs.data();
    const auto k = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    hyp = advance(hyp, step, k, nl);
  }
  if (!hyp.complete()) return std::nullopt;
  return BeamCandidate{hyp.actions, hyp.action_ids, hyp.log_prob, hyp.actions.size()};
}

template <class T>
std::vector<BeamCandidate> BasicGenerator<T>::beam_search(const std::vector<std::string>& nl,
                                                          std::size_t beam_width, std::size_t max_steps) const {
  if (beam_width == 0) throw std::invalid_argument("beam_search: beam width must be at least 1");
  NoGradGuard guard;
  auto enc = encode(nl);
  std::vector<Hypothesis<T>> live{initial_hypothesis(enc)};
  std::vector<BeamCandidate> finished;

  struct Expansion {
    std::size_t hyp;
    std::size_t choice;
    double score;
    std::vector<std::size_t> ids;
  };

  for (std::size_t t = 0; t < max_steps && !live.empty() && finished.size() < beam_width; ++t) {
    std::vector<DecoderStep<T>> steps;
    std::vector<Expansion> expansions;
    for (std::size_t i = 0; i < live.size(); ++i) {
      steps.push_back(decode_step(live[i], enc, nl));
      const auto& step = steps.back();
      for (std::size_t k = 0; k < step.legal.size(); ++k) {
        Expansion e{i, k, live[i].log_prob + static_cast<double>(step.log_probs[k]), live[i].action_ids};
        e.ids.push_back(step.legal[k]);
        expansions.push_back(std::move(e));
      }
    }
    std::sort(expansions.begin(), expansions.end(), [](const Expansion& a, const Expansion& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.ids < b.ids;
    });
    const std::size_t keep = std::min(expansions.size(), beam_width - finished.size());
    std::vector<Hypothesis<T>> next;
    for (std::size_t j = 0; j < keep; ++j) {
      const auto& e = expansions[j];
      auto h = advance(live[e.hyp], steps[e.hyp], e.choice, nl);
      if (h.complete()) {
        finished.push_back(BeamCandidate{h.actions, h.action_ids, h.log_prob, h.actions.size()});
      } else {
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
  }

  // Pruning can drop the greedy path; keep it so the best candidate never
  // scores below greedy decoding.
  if (auto g = greedy(nl, max_steps)) {
    const bool present = std::any_of(finished.begin(), finished.end(),
                                     [&](const BeamCandidate& c) { return c.action_ids == g->action_ids; });
    if (!present) finished.push_back(std::move(*g));
  }
  std::sort(finished.begin(), finished.end(), candidate_less);
  if (finished.size() > beam_width) finished.resize(beam_width);
  return finished;
}

template struct DecoderStep<float>;
template struct DecoderStep<double>;
template class BasicGenerator<float>;
template class BasicGenerator<double>;

}  // namespace astgan
