#pragma once

// Concrete syntax for ASTs of any grammar:
//   constructor node      ctor(arg, arg)   or  ctor  when it has no fields
//   sequence field        [elem, elem]
//   token field           tok  for one plain token, otherwise 'tok tok'
// A nonterminal whose only production wraps a single token field renders as
// that token field alone. Parsing is type-directed, so the mapping is a
// bijection on well-typed ASTs.

#include <stdexcept>
#include <string>
#include <string_view>

#include "astgan/ast.hpp"
#include "astgan/grammar.hpp"

namespace astgan {

class CodeParseError : public std::invalid_argument {
 public:
  CodeParseError(std::size_t offset, const std::string& why)
      : std::invalid_argument("parse error at offset " + std::to_string(offset) + ": " + why), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

std::string render_code(const AstNode& ast, const Grammar& g);
AstNode parse_code(std::string_view code, const Grammar& g);

}  // namespace astgan
