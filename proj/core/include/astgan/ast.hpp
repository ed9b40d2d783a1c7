#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "astgan/grammar.hpp"

namespace astgan {

// Ordered typed tree. Internal nodes carry a production id and one child per
// field; token leaves carry one or more terminal tokens.
struct AstNode {
  int production = -1;
  std::vector<std::string> tokens;
  std::vector<AstNode> children;

  static AstNode leaf(std::vector<std::string> tokens) {
    AstNode n;
    n.tokens = std::move(tokens);
    return n;
  }
  static AstNode node(int production, std::vector<AstNode> children = {}) {
    AstNode n;
    n.production = production;
    n.children = std::move(children);
    return n;
  }

  bool is_leaf() const { return production < 0; }
  friend bool operator==(const AstNode&, const AstNode&) = default;
};

std::size_t count_internal_nodes(const AstNode& ast);
std::size_t count_leaf_tokens(const AstNode& ast);
std::size_t count_token_fields(const AstNode& ast);

class IllTypedAst : public std::invalid_argument {
 public:
  IllTypedAst(const std::string& path, const std::string& why)
      : std::invalid_argument("ill-typed AST at " + path + ": " + why), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// A token may be stored in a leaf: non-empty, no whitespace or quote
// characters, and not the reserved end marker.
bool is_code_token(std::string_view token);

// Throws IllTypedAst naming the offending node path (e.g. "answer/goal/first").
void validate_ast(const AstNode& ast, const Grammar& g);

// Debug form, e.g. answer(and(language[java], last(...))).
std::string debug_string(const AstNode& ast, const Grammar& g);

}  // namespace astgan
