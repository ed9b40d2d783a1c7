#pragma once

// Consistency scorer D: a bidirectional LSTM summary of the utterance, a
// bottom-up encoding of the candidate AST and a two-class bilinear head.
//
//   leaf  = tanh(W_leaf * utterance-BiLSTM summary of the leaf tokens + b_leaf)
//   node  = child-sum tree LSTM over U_j * child_j, fed the production
//           embedding (see encode_node)
//   out_k = h_r' W_k h_nl + b_k,   P_sim = softmax(out)[match]
//
// The flat ablation replaces the tree encoder with a second bidirectional LSTM
// over the rendered code tokens.

#include <cstddef>
#include <string>
#include <vector>

#include "astgan/ast.hpp"
#include "astgan/autodiff.hpp"
#include "astgan/corpus.hpp"
#include "astgan/grammar.hpp"
#include "astgan/nn.hpp"
#include "astgan/params.hpp"
#include "astgan/rng.hpp"

namespace astgan {

struct DisDims {
  std::size_t embed_size = 64;
  std::size_t hidden_size = 64;
  bool flat_encoder = false;
};

template <class T>
struct TreeEncoding {
  std::vector<BasicValue<T>> nodes;  // postorder, root last
  BasicValue<T> root;
};

template <class T>
struct ConsistencyScore {
  static constexpr std::size_t kMatch = 0;
  static constexpr std::size_t kMismatch = 1;

  BasicValue<T> out;        // (2) logits
  BasicValue<T> log_probs;  // (2)
  double p_sim() const;
};

struct LabeledPair {
  std::vector<std::string> nl;
  AstNode ast;
  bool real = true;
};

// Tokens the discriminator embeds for one example: utterance, leaf tokens and
// the tokens of the rendered code (for the flat encoder).
std::vector<std::vector<std::string>> discriminator_sequences(const Example& ex);

template <class T>
class BasicDiscriminator {
 public:
  BasicDiscriminator(const Grammar& g, const Vocabulary& vocab, DisDims dims, const BasicParameterStore<T>& params);

  static void init_params(BasicParameterStore<T>& store, const Grammar& g, const Vocabulary& vocab, DisDims dims,
                          Rng& rng);

  BiEncoding<T> encode_nl(const std::vector<std::string>& nl) const;
  TreeEncoding<T> encode_tree(const AstNode& ast) const;
  // Root vector of the configured program encoder.
  BasicValue<T> encode_program(const AstNode& ast) const;
  ConsistencyScore<T> score(const std::vector<std::string>& nl, const AstNode& ast) const;
  // Mean over the batch of -log D(real) and -log(1 - D(fake)).
  BasicValue<T> loss(const std::vector<LabeledPair>& batch) const;

  const DisDims& dims() const { return dims_; }

 private:
  LstmState<T> encode_node(const AstNode& node, std::vector<BasicValue<T>>& out) const;

  const Grammar* g_;
  const Vocabulary* vocab_;
  DisDims dims_;

  BasicValue<T> embed_;
  LstmWeights<T> nl_fwd_, nl_bwd_;
  LstmWeights<T> flat_fwd_, flat_bwd_;
  BasicValue<T> leaf_W_, leaf_b_;
  BasicValue<T> prod_embed_;
  std::vector<BasicValue<T>> child_U_;
  BasicValue<T> node_W_, node_b_;
  BasicValue<T> forget_W_, forget_b_;
  BasicValue<T> head_W_[2];  // per class, (T x 2H)
  BasicValue<T> head_b_;
};

using Discriminator = BasicDiscriminator<float>;

extern template class BasicDiscriminator<float>;
extern template class BasicDiscriminator<double>;

}  // namespace astgan
