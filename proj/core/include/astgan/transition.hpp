#pragma once

// Two-kind transition system that builds an AST top-down, left to right:
// ApplyRule expands the leftmost pending nonterminal with a production and
// GenToken appends a terminal to the pending token field (closed by the
// reserved end token).

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "astgan/ast.hpp"
#include "astgan/grammar.hpp"
#include "astgan/rng.hpp"

namespace astgan {

struct Action {
  enum class Kind { ApplyRule, GenToken };

  Kind kind = Kind::ApplyRule;
  int production = -1;
  std::string token;

  static Action apply_rule(int production) { return Action{Kind::ApplyRule, production, {}}; }
  static Action gen_token(std::string token) { return Action{Kind::GenToken, -1, std::move(token)}; }
  static Action end() { return gen_token(std::string(kEndToken)); }

  bool is_rule() const { return kind == Kind::ApplyRule; }
  bool is_end() const { return kind == Kind::GenToken && token == kEndToken; }

  friend bool operator==(const Action&, const Action&) = default;
};

std::string to_string(const Action& a, const Grammar& g);

class IllegalActionError : public std::invalid_argument {
 public:
  IllegalActionError(std::size_t step, const std::string& why)
      : std::invalid_argument("illegal action at step " + std::to_string(step) + ": " + why), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class IncompleteDerivationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TrailingActionsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Pending slot of a partial derivation.
struct FrontierSlot {
  int nonterminal = kTokenSlot;  // kTokenSlot for a token field
  int parent_step = -1;          // step that applied the parent production; -1 at the root

  bool is_token() const { return nonterminal == kTokenSlot; }
  friend bool operator==(const FrontierSlot&, const FrontierSlot&) = default;
};

class FrontierState {
 public:
  static FrontierState initial(const Grammar& g);

  bool complete() const { return stack_.empty(); }
  const FrontierSlot& top() const;
  // Actions applied so far.
  std::size_t step() const { return step_; }
  // Tokens already emitted into the pending token field.
  std::size_t tokens_in_field() const { return tokens_in_field_; }
  const std::vector<FrontierSlot>& stack() const { return stack_; }

  // Throws IllegalActionError when `a` is not legal here.
  void apply(const Action& a, const Grammar& g);

  friend bool operator==(const FrontierState&, const FrontierState&) = default;

 private:
  std::vector<FrontierSlot> stack_;  // back() is the leftmost pending slot
  std::size_t step_ = 0;
  std::size_t tokens_in_field_ = 0;
};

// Preorder trace: ApplyRule per internal node, then the tokens of each token
// field followed by the end token.
std::vector<Action> ast_to_actions(const AstNode& ast, const Grammar& g);

AstNode actions_to_ast(const std::vector<Action>& actions, const Grammar& g);

// Index layout over every action the decoder can score:
//   [ApplyRule x P][GenToken vocabulary x V][end token][copy position x L]
// The copy block addresses input positions; a copied token that is also in
// the vocabulary is addressed through its vocabulary index instead.
class ActionSpace {
 public:
  ActionSpace() = default;
  ActionSpace(std::size_t num_productions, std::vector<std::string> vocab_tokens, std::size_t max_input_len);

  std::size_t size() const { return num_productions_ + vocab_.size() + 1 + max_input_len_; }
  std::size_t num_productions() const { return num_productions_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  std::size_t max_input_len() const { return max_input_len_; }
  const std::vector<std::string>& vocab_tokens() const { return vocab_; }

  std::size_t rule_index(int production) const { return static_cast<std::size_t>(production); }
  std::size_t vocab_index(std::size_t vocab_pos) const { return num_productions_ + vocab_pos; }
  std::size_t end_index() const { return num_productions_ + vocab_.size(); }
  std::size_t copy_index(std::size_t position) const { return end_index() + 1 + position; }

  bool is_rule_index(std::size_t i) const { return i < num_productions_; }
  bool is_vocab_index(std::size_t i) const { return i >= num_productions_ && i < end_index(); }
  bool is_copy_index(std::size_t i) const { return i > end_index() && i < size(); }

  // Position of `token` in the vocabulary block.
  std::optional<std::size_t> vocab_position(const std::string& token) const;

  Action action_at(std::size_t index, const std::vector<std::string>& input) const;
  // Canonical index: vocabulary entry when present, otherwise the first input
  // position holding the token. Throws std::invalid_argument if neither.
  std::size_t index_of(const Action& a, const std::vector<std::string>& input) const;

 private:
  std::size_t num_productions_ = 0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::size_t> vocab_index_;
  std::size_t max_input_len_ = 0;
};

// Input positions whose token may be copied into a token field.
std::vector<std::size_t> copyable_positions(const std::vector<std::string>& input);

// True for exactly the actions legal at `state`: the productions of the
// frontier nonterminal, or at a token field every vocabulary token, the end
// token (once the field holds a token) and the canonical copy position of each
// copyable input token absent from the vocabulary.
std::vector<bool> legal_action_mask(const FrontierState& state, const Grammar& g, const ActionSpace& space,
                                    const std::vector<std::string>& input);

struct RandomDerivation {
  std::vector<Action> actions;
  bool complete = false;
};

// Uniformly random legal policy; stops after max_steps actions.
RandomDerivation random_derivation(const Grammar& g, const ActionSpace& space,
                                   const std::vector<std::string>& input, Rng& rng, std::size_t max_steps);

}  // namespace astgan
