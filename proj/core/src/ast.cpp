#include "astgan/ast.hpp"

#include <cctype>

namespace astgan {

std::size_t count_internal_nodes(const AstNode& ast) {
  if (ast.is_leaf()) return 0;
  std::size_t n = 1;
  for (const auto& c : ast.children) n += count_internal_nodes(c);
  return n;
}

std::size_t count_leaf_tokens(const AstNode& ast) {
  if (ast.is_leaf()) return ast.tokens.size();
  std::size_t n = 0;
  for (const auto& c : ast.children) n += count_leaf_tokens(c);
  return n;
}

std::size_t count_token_fields(const AstNode& ast) {
  if (ast.is_leaf()) return 1;
  std::size_t n = 0;
  for (const auto& c : ast.children) n += count_token_fields(c);
  return n;
}

bool is_code_token(std::string_view token) {
  if (token.empty() || token == kEndToken) return false;
  for (char c : token) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '\'' || c == '"' || c == '\\') return false;
  }
  return true;
}

namespace {

void validate_slot(const AstNode& node, int slot, const Grammar& g, const std::string& path) {
  if (slot == kTokenSlot) {
    if (!node.is_leaf()) throw IllTypedAst(path, "expected a token leaf, found a constructor node");
    if (node.tokens.empty()) throw IllTypedAst(path, "token leaf is empty");
    for (const auto& t : node.tokens) {
      if (!is_code_token(t)) throw IllTypedAst(path, "invalid token '" + t + "'");
    }
    if (!node.children.empty()) throw IllTypedAst(path, "token leaf has children");
    return;
  }
  if (node.is_leaf()) {
    throw IllTypedAst(path, "expected nonterminal " + g.nonterminal_name(slot) + ", found a token leaf");
  }
  if (node.production >= static_cast<int>(g.num_productions())) {
    throw IllTypedAst(path, "unknown production id " + std::to_string(node.production));
  }
  const Production& p = g.production(node.production);
  if (p.lhs != slot) {
    throw IllTypedAst(path, "constructor " + p.constructor + " does not produce " + g.nonterminal_name(slot));
  }
  if (!node.tokens.empty()) throw IllTypedAst(path, "constructor node carries tokens");
  if (node.children.size() != p.fields.size()) {
    throw IllTypedAst(path, p.constructor + " expects " + std::to_string(p.fields.size()) + " children, found " +
                                std::to_string(node.children.size()));
  }
  for (std::size_t i = 0; i < p.fields.size(); ++i) {
    validate_slot(node.children[i], p.fields[i].slot, g, path + "/" + p.fields[i].name);
  }
}

void debug_into(const AstNode& n, const Grammar& g, std::string& out) {
  if (n.is_leaf()) {
    out += '[';
    for (std::size_t i = 0; i < n.tokens.size(); ++i) {
      if (i) out += ' ';
      out += n.tokens[i];
    }
    out += ']';
    return;
  }
  out += g.production(n.production).constructor;
  out += '(';
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    if (i) out += ", ";
    debug_into(n.children[i], g, out);
  }
  out += ')';
}

}  // namespace

void validate_ast(const AstNode& ast, const Grammar& g) {
  const std::string root_path = ast.is_leaf() || ast.production >= static_cast<int>(g.num_productions())
                                    ? std::string("root")
                                    : g.production(ast.production).constructor;
  validate_slot(ast, g.root(), g, root_path);
}

std::string debug_string(const AstNode& ast, const Grammar& g) {
  std::string out;
  debug_into(ast, g, out);
  return out;
}

}  // namespace astgan
