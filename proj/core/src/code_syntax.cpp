#include "astgan/code_syntax.hpp"

#include <cctype>

namespace astgan {
namespace {

bool is_special(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '[' || c == ']' || c == ',' ||
         c == '\'';
}

bool is_bare(std::string_view tok) {
  for (char c : tok) {
    if (is_special(c)) return false;
  }
  return !tok.empty();
}

// Sole production of `nonterminal` when it wraps exactly one token field.
std::optional<int> token_wrapper(const Grammar& g, int nonterminal) {
  const auto& prods = g.productions_for(nonterminal);
  if (prods.size() != 1) return std::nullopt;
  const Production& p = g.production(prods[0]);
  if (p.fields.size() != 1 || !p.fields[0].is_token()) return std::nullopt;
  return p.id;
}

void render_tokens(const AstNode& leaf, std::string& out) {
  if (leaf.tokens.size() == 1 && is_bare(leaf.tokens[0])) {
    out += leaf.tokens[0];
    return;
  }
  out += '\'';
  for (std::size_t i = 0; i < leaf.tokens.size(); ++i) {
    if (i) out += ' ';
    out += leaf.tokens[i];
  }
  out += '\'';
}

void render_slot(const AstNode& n, int slot, const Grammar& g, std::string& out);

void render_list(const AstNode& n, const Grammar& g, std::string& out) {
  out += '[';
  const AstNode* cur = &n;
  bool first = true;
  while (!g.production(cur->production).fields.empty()) {
    const Production& cons = g.production(cur->production);
    if (!first) out += ", ";
    first = false;
    render_slot(cur->children[0], cons.fields[0].slot, g, out);
    cur = &cur->children[1];
  }
  out += ']';
}

void render_slot(const AstNode& n, int slot, const Grammar& g, std::string& out) {
  if (slot == kTokenSlot) {
    render_tokens(n, out);
    return;
  }
  if (token_wrapper(g, slot)) {
    render_tokens(n.children[0], out);
    return;
  }
  const Production& p = g.production(n.production);
  if (p.synthetic) {
    render_list(n, g, out);
    return;
  }
  out += p.constructor;
  if (p.fields.empty()) return;
  out += '(';
  for (std::size_t i = 0; i < p.fields.size(); ++i) {
    if (i) out += ", ";
    render_slot(n.children[i], p.fields[i].slot, g, out);
  }
  out += ')';
}

class CodeParser {
 public:
  CodeParser(std::string_view text, const Grammar& g) : text_(text), g_(g) {}

  AstNode run() {
    skip_ws();
    if (pos_ == text_.size()) fail("empty input");
    AstNode root = slot(g_.root());
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing text");
    return root;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }
  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& why) const { throw CodeParseError(pos_, why); }

  std::string bare_word() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_special(text_[pos_])) ++pos_;
    if (start == pos_) fail("expected a name or token");
    return std::string(text_.substr(start, pos_ - start));
  }

  AstNode tokens() {
    skip_ws();
    if (peek('\'')) {
      ++pos_;
      const std::size_t start = pos_;
      const std::size_t close = text_.find('\'', pos_);
      if (close == std::string_view::npos) fail("unterminated quoted token field");
      std::vector<std::string> toks;
      std::string_view body = text_.substr(start, close - start);
      std::size_t i = 0;
      while (i < body.size()) {
        if (body[i] == ' ') {
          pos_ = start + i;
          fail("tokens in a quoted field are separated by single spaces");
        }
        std::size_t j = body.find(' ', i);
        if (j == std::string_view::npos) j = body.size();
        std::string tok(body.substr(i, j - i));
        if (!is_code_token(tok)) {
          pos_ = start + i;
          fail("invalid token '" + tok + "'");
        }
        toks.push_back(std::move(tok));
        i = j == body.size() ? j : j + 1;
        if (j != body.size() && i == body.size()) {
          pos_ = start + j;
          fail("trailing space in quoted token field");
        }
      }
      if (toks.empty()) fail("empty token field");
      pos_ = close + 1;
      return AstNode::leaf(std::move(toks));
    }
    const std::size_t start = pos_;
    std::string tok = bare_word();
    if (!is_code_token(tok)) {
      pos_ = start;
      fail("invalid token '" + tok + "'");
    }
    return AstNode::leaf({std::move(tok)});
  }

  AstNode list(int list_nt) {
    const auto& prods = g_.productions_for(list_nt);
    const Production* cons = nullptr;
    const Production* nil = nullptr;
    for (int id : prods) {
      const Production& p = g_.production(id);
      (p.fields.empty() ? nil : cons) = &p;
    }
    expect('[');
    std::vector<AstNode> elems;
    if (!peek(']')) {
      while (true) {
        elems.push_back(slot(cons->fields[0].slot));
        if (peek(']')) break;
        expect(',');
      }
    }
    expect(']');
    AstNode tail = AstNode::node(nil->id);
    for (auto it = elems.rbegin(); it != elems.rend(); ++it) {
      tail = AstNode::node(cons->id, {std::move(*it), std::move(tail)});
    }
    return tail;
  }

  AstNode slot(int nonterminal) {
    if (nonterminal == kTokenSlot) return tokens();
    if (auto wrapper = token_wrapper(g_, nonterminal)) return AstNode::node(*wrapper, {tokens()});
    const auto& prods = g_.productions_for(nonterminal);
    if (!prods.empty() && g_.production(prods[0]).synthetic) return list(nonterminal);

    const std::size_t start = (skip_ws(), pos_);
    const std::string name = bare_word();
    auto id = g_.find_constructor(name);
    if (!id || g_.production(*id).lhs != nonterminal) {
      pos_ = start;
      fail("'" + name + "' is not a constructor of " + g_.nonterminal_name(nonterminal));
    }
    const Production& p = g_.production(*id);
    std::vector<AstNode> children;
    if (!p.fields.empty()) {
      expect('(');
      for (std::size_t i = 0; i < p.fields.size(); ++i) {
        if (i) expect(',');
        children.push_back(slot(p.fields[i].slot));
      }
      expect(')');
    }
    return AstNode::node(p.id, std::move(children));
  }

  std::string_view text_;
  const Grammar& g_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string render_code(const AstNode& ast, const Grammar& g) {
  validate_ast(ast, g);
  std::string out;
  render_slot(ast, g.root(), g, out);
  return out;
}

AstNode parse_code(std::string_view code, const Grammar& g) {
  return CodeParser(code, g).run();
}

}  // namespace astgan
