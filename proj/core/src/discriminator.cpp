#include "astgan/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "astgan/code_syntax.hpp"

namespace astgan {

template <class T>
double ConsistencyScore<T>::p_sim() const {
  return std::exp(static_cast<double>(log_probs[kMatch]));
}

std::vector<std::vector<std::string>> discriminator_sequences(const Example& ex) {
  return {ex.nl, code_tokens(ex.ast), tokenize(ex.code)};
}

template <class T>
BasicDiscriminator<T>::BasicDiscriminator(const Grammar& g, const Vocabulary& vocab, DisDims dims,
                                          const BasicParameterStore<T>& params)
    : g_(&g), vocab_(&vocab), dims_(dims) {
  embed_ = params.get("dis.embed");
  nl_fwd_ = LstmWeights<T>::from(params, "dis.nl_fwd");
  nl_bwd_ = LstmWeights<T>::from(params, "dis.nl_bwd");
  if (dims.flat_encoder) {
    flat_fwd_ = LstmWeights<T>::from(params, "dis.flat_fwd");
    flat_bwd_ = LstmWeights<T>::from(params, "dis.flat_bwd");
  } else {
    leaf_W_ = params.get("dis.leaf.W");
    leaf_b_ = params.get("dis.leaf.b");
    prod_embed_ = params.get("dis.prod_embed");
    for (std::size_t j = 0; j < std::max<std::size_t>(1, g.max_arity()); ++j) {
      child_U_.push_back(params.get("dis.child" + std::to_string(j) + ".U"));
    }
    node_W_ = params.get("dis.node.W");
    node_b_ = params.get("dis.node.b");
    forget_W_ = params.get("dis.forget.W");
    forget_b_ = params.get("dis.forget.b");
  }
  head_W_[0] = params.get("dis.head.W0");
  head_W_[1] = params.get("dis.head.W1");
  head_b_ = params.get("dis.head.b");
  if (embed_.dim(0) != vocab.size()) throw std::invalid_argument("discriminator embeddings do not match the vocabulary");
}

template <class T>
void BasicDiscriminator<T>::init_params(BasicParameterStore<T>& store, const Grammar& g, const Vocabulary& vocab,
                                        DisDims dims, Rng& rng) {
  const std::size_t E = dims.embed_size;
  const std::size_t H = dims.hidden_size;
  const std::size_t D = 2 * H;
  store.add("dis.embed", xavier_uniform_init<T>({vocab.size(), E}, vocab.size(), E, rng));
  add_lstm_params(store, "dis.nl_fwd", E, H, rng);
  add_lstm_params(store, "dis.nl_bwd", E, H, rng);
  if (dims.flat_encoder) {
    add_lstm_params(store, "dis.flat_fwd", E, H, rng);
    add_lstm_params(store, "dis.flat_bwd", E, H, rng);
  } else {
    const std::size_t P = g.num_productions();
    store.add("dis.leaf.W", xavier_uniform_init<T>({D, D}, D, D, rng));
    store.add("dis.leaf.b", BasicValue<T>::zeros({D}, true));
    store.add("dis.prod_embed", xavier_uniform_init<T>({P, D}, P, D, rng));
    for (std::size_t j = 0; j < std::max<std::size_t>(1, g.max_arity()); ++j) {
      store.add("dis.child" + std::to_string(j) + ".U", xavier_uniform_init<T>({D, D}, D, D, rng));
    }
    store.add("dis.node.W", xavier_uniform_init<T>({3 * D, 2 * D}, 2 * D, 3 * D, rng));
    store.add("dis.node.b", BasicValue<T>::zeros({3 * D}, true));
    store.add("dis.forget.W", xavier_uniform_init<T>({D, 2 * D}, 2 * D, D, rng));
    store.add("dis.forget.b", BasicValue<T>::zeros({D}, true));
  }
  store.add("dis.head.W0", xavier_uniform_init<T>({D, D}, D, D, rng));
  store.add("dis.head.W1", xavier_uniform_init<T>({D, D}, D, D, rng));
  store.add("dis.head.b", BasicValue<T>::zeros({2}, true));
}

template <class T>
BiEncoding<T> BasicDiscriminator<T>::encode_nl(const std::vector<std::string>& nl) const {
  if (nl.empty()) throw std::invalid_argument("discriminator: empty utterance");
  return bilstm_encode(embed_, vocab_->encode(nl), nl_fwd_, nl_bwd_);
}

// Child-sum tree LSTM. Child j enters through its position's transform U_j:
//   x = e_prod, m_j = U_j h_j, s = sum_j m_j
//   [i; o; u] = [sig; sig; tanh](W [x; s] + b)
//   f_j = sig(W_f [x; m_j] + b_f)
//   c = i*u + sum_j f_j*c_j,  h = o*tanh(c)
// A leaf runs its tokens through the utterance BiLSTM, so program literals and
// utterance words share one encoder: c = W_leaf nl_summary(tokens) + b_leaf, h = tanh(c).
template <class T>
LstmState<T> BasicDiscriminator<T>::encode_node(const AstNode& node, std::vector<BasicValue<T>>& out) const {
  if (node.is_leaf()) {
    auto tokens = bilstm_encode(embed_, vocab_->encode(node.tokens), nl_fwd_, nl_bwd_).summary;
    auto c = add(matmul(leaf_W_, tokens), leaf_b_);
    auto h = tanh(c);
    out.push_back(h);
    return {h, c};
  }
  const std::size_t D = node_b_.size() / 3;
  auto x = embedding_lookup(prod_embed_, static_cast<std::size_t>(node.production));
  std::vector<BasicValue<T>> messages, cells;
  for (std::size_t j = 0; j < node.children.size(); ++j) {
    auto child = encode_node(node.children[j], out);
    messages.push_back(matmul(child_U_[j], child.h));
    cells.push_back(child.c);
  }
  auto s = BasicValue<T>::zeros({D});
  for (const auto& m : messages) s = add(s, m);
  auto z = add(matmul(node_W_, concat<T>({x, s})), node_b_);
  auto c = mul(sigmoid(slice(z, 0, D)), tanh(slice(z, 2 * D, 3 * D)));
  for (std::size_t j = 0; j < messages.size(); ++j) {
    auto f = sigmoid(add(matmul(forget_W_, concat<T>({x, messages[j]})), forget_b_));
    c = add(c, mul(f, cells[j]));
  }
  auto h = mul(sigmoid(slice(z, D, 2 * D)), tanh(c));
  out.push_back(h);
  return {h, c};
}

template <class T>
TreeEncoding<T> BasicDiscriminator<T>::encode_tree(const AstNode& ast) const {
  if (dims_.flat_encoder) throw std::logic_error("encode_tree: discriminator uses the flat encoder");
  validate_ast(ast, *g_);
  TreeEncoding<T> enc;
  enc.root = encode_node(ast, enc.nodes).h;
  return enc;
}

template <class T>
BasicValue<T> BasicDiscriminator<T>::encode_program(const AstNode& ast) const {
  if (!dims_.flat_encoder) return encode_tree(ast).root;
  auto tokens = tokenize(render_code(ast, *g_));
  return bilstm_encode(embed_, vocab_->encode(tokens), flat_fwd_, flat_bwd_).summary;
}

template <class T>
ConsistencyScore<T> BasicDiscriminator<T>::score(const std::vector<std::string>& nl, const AstNode& ast) const {
  auto h_nl = encode_nl(nl).summary;
  auto h_r = encode_program(ast);
  auto logits = concat<T>({dot(h_r, matmul(head_W_[0], h_nl)), dot(h_r, matmul(head_W_[1], h_nl))});
  ConsistencyScore<T> s;
  s.out = add(logits, head_b_);
  s.log_probs = log_softmax(s.out);
  return s;
}

template <class T>
BasicValue<T> BasicDiscriminator<T>::loss(const std::vector<LabeledPair>& batch) const {
  if (batch.empty()) throw std::invalid_argument("discriminator loss: empty batch");
  std::vector<BasicValue<T>> terms;
  terms.reserve(batch.size());
  for (const auto& ex : batch) {
    auto s = score(ex.nl, ex.ast);
    const std::size_t k = ex.real ? ConsistencyScore<T>::kMatch : ConsistencyScore<T>::kMismatch;
    terms.push_back(gather(s.log_probs, {k}));
  }
  return neg(mean(concat(terms)));
}

template struct ConsistencyScore<float>;
template struct ConsistencyScore<double>;
template class BasicDiscriminator<float>;
template class BasicDiscriminator<double>;

}  // namespace astgan
