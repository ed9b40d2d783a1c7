#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace astgan {

// Reserved terminal closing every token field.
inline constexpr std::string_view kEndToken = "</t>";

// Slot value for fields typed as terminal token sequences.
inline constexpr int kTokenSlot = -1;

class GrammarError : public std::runtime_error {
 public:
  enum class Kind { Syntax, UndefinedNonterminal, DuplicateConstructor, DuplicateField, Unproductive, Empty };

  GrammarError(Kind kind, std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), kind_(kind), line_(line) {}

  Kind kind() const { return kind_; }
  std::size_t line() const { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

struct Field {
  std::string name;
  std::string type;  // element type name as written ("token" for terminals)
  bool is_sequence = false;
  int slot = kTokenSlot;  // nonterminal id filled by this field, or kTokenSlot

  bool is_token() const { return slot == kTokenSlot; }
};

struct Production {
  int id = 0;
  int lhs = 0;
  std::string constructor;
  std::vector<Field> fields;
  // Generated cons/nil productions backing `Type*` fields.
  bool synthetic = false;
};

// Context-free grammar over typed constructors. Immutable after construction.
//
// Text format, one production per line:
//   Lhs -> Constructor(field:Type, field:Type*, field:token)
// A constructor without fields may omit the parentheses. `#` starts a
// comment; the first production's lhs is the root. A `Type*` field is backed
// by a generated list nonterminal `Type*` with productions
// `Type*.cons(head:Type, tail:Type*)` and `Type*.nil()`.
class Grammar {
 public:
  static Grammar parse(std::string_view text);
  static Grammar load_file(const std::filesystem::path& path);

  int root() const { return root_; }
  const std::string& nonterminal_name(int id) const { return nonterminals_.at(static_cast<std::size_t>(id)); }
  int nonterminal_id(std::string_view name) const;
  std::size_t num_nonterminals() const { return nonterminals_.size(); }

  const std::vector<Production>& productions() const { return productions_; }
  const Production& production(int id) const { return productions_.at(static_cast<std::size_t>(id)); }
  std::size_t num_productions() const { return productions_.size(); }
  // Productions written in the source text, excluding generated list rules.
  std::size_t declared_production_count() const { return declared_; }

  const std::vector<int>& productions_for(int nonterminal) const {
    return by_lhs_.at(static_cast<std::size_t>(nonterminal));
  }
  std::optional<int> find_constructor(std::string_view name) const;

  bool has_token_fields() const;
  std::size_t max_arity() const;

  // Canonical text of every production; comments and spacing do not affect it.
  std::string canonical_text() const;
  // FNV-1a 64 of canonical_text().
  std::uint64_t fingerprint() const;

 private:
  std::vector<std::string> nonterminals_;
  std::unordered_map<std::string, int> nonterminal_index_;
  std::vector<Production> productions_;
  std::vector<std::vector<int>> by_lhs_;
  std::unordered_map<std::string, int> constructor_index_;
  std::size_t declared_ = 0;
  int root_ = 0;
};

}  // namespace astgan
