#include "astgan/transition.hpp"

#include <unordered_set>

namespace astgan {

std::string to_string(const Action& a, const Grammar& g) {
  if (a.is_rule()) {
    if (a.production >= 0 && a.production < static_cast<int>(g.num_productions())) {
      return "ApplyRule(" + g.production(a.production).constructor + ")";
    }
    return "ApplyRule(#" + std::to_string(a.production) + ")";
  }
  return "GenToken(" + a.token + ")";
}

FrontierState FrontierState::initial(const Grammar& g) {
  FrontierState s;
  s.stack_.push_back(FrontierSlot{g.root(), -1});
  return s;
}

const FrontierSlot& FrontierState::top() const {
  if (stack_.empty()) throw std::logic_error("frontier: derivation is complete");
  return stack_.back();
}

void FrontierState::apply(const Action& a, const Grammar& g) {
  if (stack_.empty()) throw IllegalActionError(step_, "derivation is already complete");
  const FrontierSlot slot = stack_.back();
  if (slot.is_token()) {
    if (a.is_rule()) {
      throw IllegalActionError(step_, "expected a token for the pending token field, got " + to_string(a, g));
    }
    if (a.is_end()) {
      if (tokens_in_field_ == 0) throw IllegalActionError(step_, "token field cannot be empty");
      stack_.pop_back();
      tokens_in_field_ = 0;
    } else {
      if (!is_code_token(a.token)) throw IllegalActionError(step_, "'" + a.token + "' is not a valid code token");
      ++tokens_in_field_;
    }
  } else {
    const std::string& expected = g.nonterminal_name(slot.nonterminal);
    if (!a.is_rule()) {
      throw IllegalActionError(step_, "expected ApplyRule for nonterminal " + expected + ", got " + to_string(a, g));
    }
    if (a.production < 0 || a.production >= static_cast<int>(g.num_productions())) {
      throw IllegalActionError(step_, "unknown production id " + std::to_string(a.production));
    }
    const Production& p = g.production(a.production);
    if (p.lhs != slot.nonterminal) {
      throw IllegalActionError(step_, "constructor " + p.constructor + " does not expand nonterminal " + expected);
    }
    stack_.pop_back();
    for (auto it = p.fields.rbegin(); it != p.fields.rend(); ++it) {
      stack_.push_back(FrontierSlot{it->slot, static_cast<int>(step_)});
    }
  }
  ++step_;
}

namespace {

void trace(const AstNode& n, int slot, const Grammar& g, std::vector<Action>& out) {
  if (slot == kTokenSlot) {
    for (const auto& t : n.tokens) out.push_back(Action::gen_token(t));
    out.push_back(Action::end());
    return;
  }
  out.push_back(Action::apply_rule(n.production));
  const Production& p = g.production(n.production);
  for (std::size_t i = 0; i < p.fields.size(); ++i) trace(n.children[i], p.fields[i].slot, g, out);
}

class Replayer {
 public:
  Replayer(const std::vector<Action>& actions, const Grammar& g) : actions_(actions), g_(g) {}

  AstNode run() {
    AstNode root = slot(g_.root());
    if (pos_ != actions_.size()) {
      throw TrailingActionsError(std::to_string(actions_.size() - pos_) + " trailing action(s) after step " +
                                 std::to_string(pos_));
    }
    return root;
  }

 private:
  const Action& next(const std::string& expecting) {
    if (pos_ >= actions_.size()) {
      throw IncompleteDerivationError("derivation incomplete after " + std::to_string(pos_) + " actions; expecting " +
                                      expecting);
    }
    return actions_[pos_++];
  }

  AstNode slot(int nonterminal) {
    if (nonterminal == kTokenSlot) {
      std::vector<std::string> tokens;
      while (true) {
        const std::size_t step = pos_;
        const Action& a = next("a token");
        if (a.is_rule()) throw IllegalActionError(step, "expected a token field, got " + to_string(a, g_));
        if (a.is_end()) {
          if (tokens.empty()) throw IllegalActionError(step, "token field cannot be empty");
          break;
        }
        if (!is_code_token(a.token)) throw IllegalActionError(step, "'" + a.token + "' is not a valid code token");
        tokens.push_back(a.token);
      }
      return AstNode::leaf(std::move(tokens));
    }
    const std::string& expected = g_.nonterminal_name(nonterminal);
    const std::size_t step = pos_;
    const Action& a = next("nonterminal " + expected);
    if (!a.is_rule()) {
      throw IllegalActionError(step, "expected ApplyRule for nonterminal " + expected + ", got " + to_string(a, g_));
    }
    if (a.production < 0 || a.production >= static_cast<int>(g_.num_productions()) ||
        g_.production(a.production).lhs != nonterminal) {
      throw IllegalActionError(step, to_string(a, g_) + " does not expand nonterminal " + expected);
    }
    const Production& p = g_.production(a.production);
    std::vector<AstNode> children;
    children.reserve(p.fields.size());
    for (const auto& f : p.fields) children.push_back(slot(f.slot));
    return AstNode::node(p.id, std::move(children));
  }

  const std::vector<Action>& actions_;
  const Grammar& g_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<Action> ast_to_actions(const AstNode& ast, const Grammar& g) {
  validate_ast(ast, g);
  std::vector<Action> out;
  trace(ast, g.root(), g, out);
  return out;
}

AstNode actions_to_ast(const std::vector<Action>& actions, const Grammar& g) {
  return Replayer(actions, g).run();
}

ActionSpace::ActionSpace(std::size_t num_productions, std::vector<std::string> vocab_tokens,
                         std::size_t max_input_len)
    : num_productions_(num_productions), vocab_(std::move(vocab_tokens)), max_input_len_(max_input_len) {
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!is_code_token(vocab_[i])) throw std::invalid_argument("action space: invalid vocabulary token '" + vocab_[i] + "'");
    if (!vocab_index_.emplace(vocab_[i], i).second) {
      throw std::invalid_argument("action space: duplicate vocabulary token '" + vocab_[i] + "'");
    }
  }
}

std::optional<std::size_t> ActionSpace::vocab_position(const std::string& token) const {
  auto it = vocab_index_.find(token);
  if (it == vocab_index_.end()) return std::nullopt;
  return it->second;
}

Action ActionSpace::action_at(std::size_t index, const std::vector<std::string>& input) const {
  if (is_rule_index(index)) return Action::apply_rule(static_cast<int>(index));
  if (is_vocab_index(index)) return Action::gen_token(vocab_[index - num_productions_]);
  if (index == end_index()) return Action::end();
  if (is_copy_index(index)) {
    const std::size_t pos = index - end_index() - 1;
    if (pos < input.size()) return Action::gen_token(input[pos]);
  }
  throw std::out_of_range("action index " + std::to_string(index) + " out of range");
}

std::size_t ActionSpace::index_of(const Action& a, const std::vector<std::string>& input) const {
  if (a.is_rule()) {
    if (a.production < 0 || static_cast<std::size_t>(a.production) >= num_productions_) {
      throw std::invalid_argument("unknown production id " + std::to_string(a.production));
    }
    return rule_index(a.production);
  }
  if (a.is_end()) return end_index();
  if (auto v = vocab_position(a.token)) return vocab_index(*v);
  for (std::size_t i = 0; i < input.size() && i < max_input_len_; ++i) {
    if (input[i] == a.token) return copy_index(i);
  }
  throw std::invalid_argument("token '" + a.token + "' is neither in the vocabulary nor in the input");
}

std::vector<std::size_t> copyable_positions(const std::vector<std::string>& input) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (is_code_token(input[i])) out.push_back(i);
  }
  return out;
}

std::vector<bool> legal_action_mask(const FrontierState& state, const Grammar& g, const ActionSpace& space,
                                    const std::vector<std::string>& input) {
  if (state.complete()) throw std::logic_error("legal_action_mask: derivation is complete");
  std::vector<bool> mask(space.size(), false);
  const FrontierSlot& slot = state.top();
  if (!slot.is_token()) {
    for (int p : g.productions_for(slot.nonterminal)) mask[space.rule_index(p)] = true;
    return mask;
  }
  for (std::size_t v = 0; v < space.vocab_size(); ++v) mask[space.vocab_index(v)] = true;
  if (state.tokens_in_field() > 0) mask[space.end_index()] = true;
  std::unordered_set<std::string> seen;
  for (std::size_t pos : copyable_positions(input)) {
    if (pos >= space.max_input_len()) break;
    const std::string& tok = input[pos];
    if (space.vocab_position(tok) || !seen.insert(tok).second) continue;
    mask[space.copy_index(pos)] = true;
  }
  return mask;
}

RandomDerivation random_derivation(const Grammar& g, const ActionSpace& space,
                                   const std::vector<std::string>& input, Rng& rng, std::size_t max_steps) {
  RandomDerivation out;
  FrontierState state = FrontierState::initial(g);
  std::vector<std::size_t> legal;
  while (!state.complete() && out.actions.size() < max_steps) {
    const auto mask = legal_action_mask(state, g, space, input);
    legal.clear();
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) legal.push_back(i);
    }
    if (legal.empty()) break;
    Action a = space.action_at(legal[rng.uniform_int(legal.size())], input);
    state.apply(a, g);
    out.actions.push_back(std::move(a));
  }
  out.complete = state.complete();
  return out;
}

}  // namespace astgan
