#pragma once

// Four-armed bandit over nullary constructors: one arm pays 1, the rest 0.
// Policy-gradient steps should raise that arm's log-probability.

#include <cstdint>
#include <vector>

#include "astgan/code_syntax.hpp"
#include "astgan/training.hpp"

namespace astgan::testing {

inline const Grammar& bandit_grammar() {
  static const Grammar g = Grammar::parse("S -> a\nS -> b\nS -> c\nS -> d");
  return g;
}

inline Example bandit_example() {
  Example ex;
  ex.id = "bandit";
  ex.nl_text = "pick one";
  ex.nl = tokenize(ex.nl_text);
  ex.ast = AstNode::node(2, {});
  ex.code = render_code(ex.ast, bandit_grammar());
  return ex;
}

// Log-probability of the paying arm before training and after every
// `every` steps.
inline std::vector<double> run_bandit(std::size_t steps, std::size_t every, std::uint64_t seed) {
  Config c;
  c.embed_size = 12;
  c.hidden_size = 12;
  c.dis_embed_size = 8;
  c.dis_hidden_size = 8;
  c.min_freq = 1;
  c.lr = 0.05;
  const std::vector<Example> train{bandit_example()};
  Rng rng(seed);
  Model m = Model::create(c, bandit_grammar(), train, rng);
  const auto target = ast_to_actions(train[0].ast, m.grammar);
  auto log_prob = [&] {
    NoGradGuard ng;
    return static_cast<double>(m.generator().sequence_log_prob(train[0].nl, target).item());
  };
  const std::vector<const Example*> batch(4, &train[0]);
  const RewardFn reward = [&](const auto&, const AstNode& ast) { return ast == train[0].ast ? 1.0 : 0.0; };
  auto opt = AdamState::for_store(m.gen, {.lr = c.lr});
  TrainState st;
  std::vector<double> trace{log_prob()};
  for (std::size_t step = 1; step <= steps; ++step) {
    policy_gradient_step(m, batch, opt, st, rng, reward);
    if (step % every == 0) trace.push_back(log_prob());
  }
  return trace;
}

}  // namespace astgan::testing
