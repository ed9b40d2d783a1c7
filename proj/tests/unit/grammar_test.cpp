#include <gtest/gtest.h>

#include <fstream>

#include "astgan/ast.hpp"
#include "astgan/grammar.hpp"
#include "test_support.hpp"

using namespace astgan;

namespace {

GrammarError::Kind kind_of(std::string_view text) {
  try {
    Grammar::parse(text);
  } catch (const GrammarError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for: " << text;
  return GrammarError::Kind::Empty;
}

}  // namespace

TEST(Grammar, MinimalGrammar) {
  auto g = Grammar::parse("S -> Lit(v: token)");
  EXPECT_EQ(g.num_productions(), 1u);
  EXPECT_EQ(g.nonterminal_name(g.root()), "S");
  EXPECT_TRUE(g.production(0).fields[0].is_token());
  EXPECT_TRUE(g.has_token_fields());
}

TEST(Grammar, BundledGrammarProductionCountMatchesHandCount) {
  // Oracle: every non-blank line that is not a comment declares one production.
  std::ifstream in(astgan::testing::asset("jobs.grammar"));
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) {
    const auto p = line.find_first_not_of(" \t");
    if (p != std::string::npos && line[p] != '#') ++lines;
  }
  const auto& g = astgan::testing::jobs_grammar();
  EXPECT_EQ(lines, 12u);
  EXPECT_EQ(g.declared_production_count(), lines);
  EXPECT_EQ(g.num_productions(), lines);
  EXPECT_EQ(g.nonterminal_name(g.root()), "Query");
}

TEST(Grammar, ProductionIdsAreDenseAndIndexedByLhs) {
  const auto& g = astgan::testing::jobs_grammar();
  std::size_t total = 0;
  for (std::size_t nt = 0; nt < g.num_nonterminals(); ++nt) {
    for (int p : g.productions_for(static_cast<int>(nt))) {
      EXPECT_EQ(g.production(p).lhs, static_cast<int>(nt));
      ++total;
    }
  }
  EXPECT_EQ(total, g.num_productions());
  for (std::size_t i = 0; i < g.num_productions(); ++i) EXPECT_EQ(g.production(static_cast<int>(i)).id, static_cast<int>(i));
  EXPECT_EQ(g.find_constructor("req_deg"), g.find_constructor("req_deg"));
  EXPECT_FALSE(g.find_constructor("nope").has_value());
}

TEST(Grammar, SequenceFieldsDesugarToConsNil) {
  auto g = Grammar::parse(
      "Prog -> block(body:Stmt*)\n"
      "Stmt -> pass\n"
      "Stmt -> call(f:token)\n");
  EXPECT_EQ(g.declared_production_count(), 3u);
  EXPECT_EQ(g.num_productions(), 5u);
  const int list = g.nonterminal_id("Stmt*");
  ASSERT_EQ(g.productions_for(list).size(), 2u);
  const auto& cons = g.production(g.productions_for(list)[0]);
  const auto& nil = g.production(g.productions_for(list)[1]);
  EXPECT_TRUE(cons.synthetic);
  EXPECT_EQ(cons.fields.size(), 2u);
  EXPECT_EQ(cons.fields[1].slot, list);
  EXPECT_TRUE(nil.fields.empty());
  EXPECT_EQ(g.production(0).fields[0].slot, list);
  EXPECT_TRUE(g.production(0).fields[0].is_sequence);
}

TEST(Grammar, Errors) {
  EXPECT_EQ(kind_of("S -> f(x:Q)"), GrammarError::Kind::UndefinedNonterminal);
  EXPECT_EQ(kind_of("S -> f(x:token)\nS -> f(y:token)"), GrammarError::Kind::DuplicateConstructor);
  EXPECT_EQ(kind_of("S -> f(x:token, x:token)"), GrammarError::Kind::DuplicateField);
  EXPECT_EQ(kind_of("S -> f(x:token"), GrammarError::Kind::Syntax);
  EXPECT_EQ(kind_of("# nothing\n\n"), GrammarError::Kind::Empty);
  EXPECT_EQ(kind_of("S -> f(x:S)"), GrammarError::Kind::Unproductive);
}

TEST(Grammar, ErrorsCarryLineNumbers) {
  try {
    Grammar::parse("S -> f(x:token)\n# comment\nS -> g(y:Missing)\n");
    FAIL();
  } catch (const GrammarError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("Missing"), std::string::npos);
  }
}

TEST(Grammar, FingerprintIgnoresCommentsAndSpacing) {
  auto a = Grammar::parse("S -> f(x:token)\nS -> g");
  auto b = Grammar::parse("# c\nS   ->   f( x : token )\n\nS -> g  # trailing\n");
  auto c = Grammar::parse("S -> f(x:token)\nS -> h");
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
}

TEST(Grammar, EndTokenIsNotACodeToken) {
  EXPECT_FALSE(is_code_token(kEndToken));
  EXPECT_FALSE(is_code_token(""));
  EXPECT_FALSE(is_code_token("a b"));
  EXPECT_TRUE(is_code_token("java"));
}

TEST(Ast, ValidateRejectsIllTypedTreesWithPath) {
  const auto& g = astgan::testing::jobs_grammar();
  const int answer = *g.find_constructor("answer");
  const int last = *g.find_constructor("last");
  const int lang = *g.find_constructor("language");
  auto ok = AstNode::node(answer, {AstNode::node(last, {AstNode::node(lang, {AstNode::leaf({"java"})})})});
  EXPECT_NO_THROW(validate_ast(ok, g));

  auto wrong_type = AstNode::node(answer, {AstNode::node(lang, {AstNode::leaf({"java"})})});
  EXPECT_THROW(validate_ast(wrong_type, g), IllTypedAst);

  auto empty_leaf = AstNode::node(answer, {AstNode::node(last, {AstNode::node(lang, {AstNode::leaf({})})})});
  try {
    validate_ast(empty_leaf, g);
    FAIL();
  } catch (const IllTypedAst& e) {
    EXPECT_EQ(e.path(), "answer/goal/only/name");
  }

  auto end_in_leaf =
      AstNode::node(answer, {AstNode::node(last, {AstNode::node(lang, {AstNode::leaf({std::string(kEndToken)})})})});
  EXPECT_THROW(validate_ast(end_in_leaf, g), IllTypedAst);

  auto arity = AstNode::node(answer, {});
  EXPECT_THROW(validate_ast(arity, g), IllTypedAst);
}

TEST(Ast, Counts) {
  const auto& g = astgan::testing::jobs_grammar();
  const int answer = *g.find_constructor("answer");
  const int last = *g.find_constructor("last");
  const int loc = *g.find_constructor("loc");
  auto t = AstNode::node(answer, {AstNode::node(last, {AstNode::node(loc, {AstNode::leaf({"new", "york"})})})});
  EXPECT_EQ(count_internal_nodes(t), 3u);
  EXPECT_EQ(count_leaf_tokens(t), 2u);
  EXPECT_EQ(count_token_fields(t), 1u);
}
