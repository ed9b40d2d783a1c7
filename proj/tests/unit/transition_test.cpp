#include <gtest/gtest.h>

#include "astgan/ast.hpp"
#include "astgan/grammar.hpp"
#include "astgan/transition.hpp"
#include "test_support.hpp"

using namespace astgan;
using astgan::testing::jobs_grammar;
using astgan::testing::random_ast;
using astgan::testing::sample_tokens;

namespace {

const Grammar& lit_grammar() {
  static const Grammar g = Grammar::parse("S -> Lit(v: token)");
  return g;
}

const Grammar& list_grammar() {
  static const Grammar g = Grammar::parse(
      "Prog -> block(body:Stmt*, name:token)\n"
      "Stmt -> pass\n"
      "Stmt -> call(f:token, args:Expr*)\n"
      "Expr -> num(v:token)\n"
      "Expr -> neg(e:Expr)\n");
  return g;
}

ActionSpace space_for(const Grammar& g) {
  return ActionSpace(g.num_productions(), {"java", "austin", "3", "x"}, 12);
}

// Completes a derivation from `state` with a policy that closes token fields
// quickly; true once some attempt drains the frontier.
bool completable(const FrontierState& state, const Grammar& g, const ActionSpace& space,
                 const std::vector<std::string>& input, Rng& rng) {
  for (int attempt = 0; attempt < 20; ++attempt) {
    FrontierState s = state;
    for (int step = 0; step < 2000 && !s.complete(); ++step) {
      const auto mask = legal_action_mask(s, g, space, input);
      std::vector<std::size_t> legal;
      for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) legal.push_back(i);
      }
      if (legal.empty()) return false;
      std::size_t pick = legal[rng.uniform_int(legal.size())];
      if (mask[space.end_index()] && rng.bernoulli(0.5)) pick = space.end_index();
      s.apply(space.action_at(pick, input), g);
    }
    if (s.complete()) return true;
  }
  return false;
}

}  // namespace

TEST(Transition, SmallestDerivation) {
  const auto& g = lit_grammar();
  auto ast = AstNode::node(0, {AstNode::leaf({"x"})});
  const std::vector<Action> expected{Action::apply_rule(0), Action::gen_token("x"), Action::end()};
  EXPECT_EQ(ast_to_actions(ast, g), expected);
  EXPECT_EQ(actions_to_ast(expected, g), ast);
}

TEST(Transition, RoundtripOnRandomAsts) {
  Rng rng(21);
  for (const Grammar* g : {&jobs_grammar(), &list_grammar()}) {
    for (int i = 0; i < 1000; ++i) {
      const AstNode ast = random_ast(*g, g->root(), rng, sample_tokens());
      const auto actions = ast_to_actions(ast, *g);
      ASSERT_EQ(actions_to_ast(actions, *g), ast);
      // Structural count oracle.
      ASSERT_EQ(actions.size(), count_internal_nodes(ast) + count_leaf_tokens(ast) + count_token_fields(ast));
    }
  }
}

TEST(Transition, RoundtripOnUniformPolicyTraces) {
  Rng rng(4);
  for (const Grammar* g : {&jobs_grammar(), &list_grammar()}) {
    const ActionSpace space = space_for(*g);
    const std::vector<std::string> input{"jobs", "in", "boston", "with", "java", "?"};
    int complete = 0;
    for (int i = 0; i < 1000; ++i) {
      auto d = random_derivation(*g, space, input, rng, 400);
      if (!d.complete) continue;
      ++complete;
      const AstNode ast = actions_to_ast(d.actions, *g);
      EXPECT_NO_THROW(validate_ast(ast, *g));  // mask soundness
      ASSERT_EQ(ast_to_actions(ast, *g), d.actions);
    }
    EXPECT_GT(complete, 100);
  }
}

TEST(Transition, IllegalActionsNameTheStep) {
  const auto& g = lit_grammar();
  try {
    actions_to_ast({Action::apply_rule(0), Action::apply_rule(0)}, g);
    FAIL();
  } catch (const IllegalActionError& e) {
    EXPECT_EQ(e.step(), 1u);
  }
  EXPECT_THROW(actions_to_ast({Action::gen_token("x")}, g), IllegalActionError);
  EXPECT_THROW(actions_to_ast({Action::apply_rule(0), Action::end()}, g), IllegalActionError);
  EXPECT_THROW(actions_to_ast({Action::apply_rule(0), Action::gen_token("x")}, g), IncompleteDerivationError);
  EXPECT_THROW(actions_to_ast({}, g), IncompleteDerivationError);
  EXPECT_THROW(actions_to_ast({Action::apply_rule(0), Action::gen_token("x"), Action::end(), Action::end()}, g),
               TrailingActionsError);
}

TEST(Transition, FrontierTracksParentSteps) {
  const auto& g = jobs_grammar();
  auto s = FrontierState::initial(g);
  EXPECT_EQ(s.top().parent_step, -1);
  s.apply(Action::apply_rule(*g.find_constructor("answer")), g);
  EXPECT_EQ(s.top().parent_step, 0);
  s.apply(Action::apply_rule(*g.find_constructor("and")), g);
  // and(first, rest): both slots point at step 1, first on top.
  ASSERT_EQ(s.stack().size(), 2u);
  EXPECT_EQ(s.stack()[0].parent_step, 1);
  EXPECT_EQ(s.stack()[1].parent_step, 1);
  EXPECT_EQ(s.top().nonterminal, g.nonterminal_id("Constraint"));
  EXPECT_EQ(s.step(), 2u);
}

TEST(Mask, NonterminalFrontierAdmitsItsProductions) {
  const auto& g = jobs_grammar();
  const auto space = space_for(g);
  auto s = FrontierState::initial(g);
  s.apply(Action::apply_rule(*g.find_constructor("answer")), g);  // frontier: Goal (and | last)
  const auto mask = legal_action_mask(s, g, space, {"x"});
  std::size_t rules = 0, others = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) (space.is_rule_index(i) ? rules : others)++;
  }
  EXPECT_EQ(rules, 2u);
  EXPECT_EQ(others, 0u);
}

TEST(Mask, TokenFrontierAdmitsTokensOnly) {
  const auto& g = lit_grammar();
  const auto space = space_for(g);
  auto s = FrontierState::initial(g);
  s.apply(Action::apply_rule(0), g);
  const std::vector<std::string> input{"find", "java", "in", "dallas", "dallas", "new york", "?"};
  auto mask = legal_action_mask(s, g, space, input);
  EXPECT_FALSE(mask[space.rule_index(0)]);
  for (std::size_t v = 0; v < space.vocab_size(); ++v) EXPECT_TRUE(mask[space.vocab_index(v)]);
  EXPECT_FALSE(mask[space.end_index()]);  // field still empty
  EXPECT_TRUE(mask[space.copy_index(0)]);
  EXPECT_FALSE(mask[space.copy_index(1)]);  // "java" goes through the vocabulary
  EXPECT_TRUE(mask[space.copy_index(3)]);
  EXPECT_FALSE(mask[space.copy_index(4)]);  // repeat of "dallas"
  EXPECT_FALSE(mask[space.copy_index(5)]);  // a quoted phrase cannot be a code token
  EXPECT_TRUE(mask[space.copy_index(6)]);
  s.apply(Action::gen_token("dallas"), g);
  mask = legal_action_mask(s, g, space, input);
  EXPECT_TRUE(mask[space.end_index()]);
}

TEST(Mask, CompleteStateRejected) {
  const auto& g = lit_grammar();
  auto s = FrontierState::initial(g);
  for (const auto& a : {Action::apply_rule(0), Action::gen_token("x"), Action::end()}) s.apply(a, g);
  ASSERT_TRUE(s.complete());
  EXPECT_THROW(legal_action_mask(s, g, space_for(g), {}), std::logic_error);
}

TEST(Mask, EveryLegalActionKeepsDerivationCompletable) {
  Rng rng(77);
  for (const Grammar* g : {&jobs_grammar(), &list_grammar()}) {
    const auto space = space_for(*g);
    const std::vector<std::string> input{"jobs", "using", "perl", "in", "3", "cities"};
    for (int i = 0; i < 1000; ++i) {
      // A random partial derivation of random length.
      FrontierState s = FrontierState::initial(*g);
      const std::size_t len = rng.uniform_int(30);
      for (std::size_t t = 0; t < len && !s.complete(); ++t) {
        const auto mask = legal_action_mask(s, *g, space, input);
        std::vector<std::size_t> legal;
        for (std::size_t k = 0; k < mask.size(); ++k) {
          if (mask[k]) legal.push_back(k);
        }
        ASSERT_FALSE(legal.empty()) << "dead end";
        s.apply(space.action_at(legal[rng.uniform_int(legal.size())], input), *g);
      }
      if (s.complete()) continue;
      const auto mask = legal_action_mask(s, *g, space, input);
      std::size_t admitted = 0;
      for (std::size_t k = 0; k < mask.size(); ++k) {
        if (!mask[k]) continue;
        ++admitted;
        FrontierState next = s;
        next.apply(space.action_at(k, input), *g);
        ASSERT_TRUE(next.complete() || completable(next, *g, space, input, rng));
      }
      ASSERT_GE(admitted, 1u);
    }
  }
}

TEST(ActionSpace, LayoutAndIndexRoundtrip) {
  const auto& g = jobs_grammar();
  const ActionSpace space(g.num_productions(), {"java", "3"}, 5);
  EXPECT_EQ(space.size(), 12u + 2 + 1 + 5);
  EXPECT_EQ(space.end_index(), 14u);
  const std::vector<std::string> input{"jobs", "in", "reno"};
  for (std::size_t i = 0; i < space.end_index() + 1 + input.size(); ++i) {
    EXPECT_EQ(space.index_of(space.action_at(i, input), input), i) << i;
  }
  EXPECT_THROW(space.action_at(space.copy_index(3), input), std::out_of_range);
  EXPECT_THROW(space.index_of(Action::gen_token("dallas"), input), std::invalid_argument);
  EXPECT_THROW(ActionSpace(1, {"a", "a"}, 1), std::invalid_argument);
  EXPECT_THROW(ActionSpace(1, {std::string(kEndToken)}, 1), std::invalid_argument);
}
