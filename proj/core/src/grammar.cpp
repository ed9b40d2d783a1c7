#include "astgan/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace astgan {
namespace {

struct RawField {
  std::string name;
  std::string type;
  bool is_sequence = false;
};

struct RawProduction {
  std::size_t line = 0;
  std::string lhs;
  std::string constructor;
  std::vector<RawField> fields;
};

bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class LineParser {
 public:
  LineParser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  RawProduction parse() {
    RawProduction p;
    p.line = line_;
    p.lhs = ident("left-hand side nonterminal");
    skip_ws();
    if (!consume("->")) fail("expected '->'");
    p.constructor = ident("constructor name");
    skip_ws();
    if (pos_ == text_.size()) return p;  // nullary constructor written without parentheses
    if (!consume("(")) fail("expected '(' after constructor");
    skip_ws();
    if (!consume(")")) {
      while (true) {
        RawField f;
        f.name = ident("field name");
        skip_ws();
        if (!consume(":")) fail("expected ':' after field name");
        f.type = ident("field type");
        if (consume("*")) f.is_sequence = true;
        p.fields.push_back(std::move(f));
        skip_ws();
        if (consume(")")) break;
        if (!consume(",")) fail("expected ',' or ')'");
      }
    }
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing text");
    return p;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool consume(std::string_view s) {
    if (text_.substr(pos_, s.size()) == s) {
      pos_ += s.size();
      return true;
    }
    return false;
  }
  std::string ident(const char* what) {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    if (start == pos_) fail(std::string("expected ") + what);
    return std::string(text_.substr(start, pos_ - start));
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw GrammarError(GrammarError::Kind::Syntax, line_, why + " at column " + std::to_string(pos_ + 1));
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

Grammar Grammar::parse(std::string_view text) {
  std::vector<RawProduction> raw;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    bool blank = true;
    for (char c : line) blank = blank && std::isspace(static_cast<unsigned char>(c));
    if (!blank) raw.push_back(LineParser(line, line_no).parse());
    start = end + 1;
  }
  if (raw.empty()) throw GrammarError(GrammarError::Kind::Empty, 0, "grammar declares no productions");

  Grammar g;
  auto declare = [&g](const std::string& name) {
    auto [it, inserted] = g.nonterminal_index_.emplace(name, static_cast<int>(g.nonterminals_.size()));
    if (inserted) {
      g.nonterminals_.push_back(name);
      g.by_lhs_.emplace_back();
    }
    return it->second;
  };
  for (const auto& p : raw) declare(p.lhs);
  g.root_ = 0;

  std::vector<std::string> list_types;
  for (const auto& rp : raw) {
    Production p;
    p.id = static_cast<int>(g.productions_.size());
    p.lhs = g.nonterminal_index_.at(rp.lhs);
    p.constructor = rp.constructor;
    for (const auto& rf : rp.fields) {
      for (const auto& existing : p.fields) {
        if (existing.name == rf.name) {
          throw GrammarError(GrammarError::Kind::DuplicateField, rp.line,
                             "duplicate field '" + rf.name + "' in constructor '" + rp.constructor + "'");
        }
      }
      Field f;
      f.name = rf.name;
      f.type = rf.type;
      f.is_sequence = rf.is_sequence;
      if (rf.type == "token") {
        if (rf.is_sequence) {
          throw GrammarError(GrammarError::Kind::Syntax, rp.line,
                             "field '" + rf.name + "': token fields are already sequences; 'token*' is not allowed");
        }
        f.slot = kTokenSlot;
      } else {
        if (!g.nonterminal_index_.contains(rf.type)) {
          throw GrammarError(GrammarError::Kind::UndefinedNonterminal, rp.line,
                             "undefined nonterminal '" + rf.type + "' in constructor '" + rp.constructor + "'");
        }
        if (rf.is_sequence) {
          const std::string list_name = rf.type + "*";
          if (!g.nonterminal_index_.contains(list_name)) list_types.push_back(rf.type);
          f.slot = declare(list_name);
        } else {
          f.slot = g.nonterminal_index_.at(rf.type);
        }
      }
      p.fields.push_back(std::move(f));
    }
    if (!g.constructor_index_.emplace(p.constructor, p.id).second) {
      throw GrammarError(GrammarError::Kind::DuplicateConstructor, rp.line,
                         "duplicate constructor '" + p.constructor + "'");
    }
    g.by_lhs_[static_cast<std::size_t>(p.lhs)].push_back(p.id);
    g.productions_.push_back(std::move(p));
  }
  g.declared_ = g.productions_.size();

  for (const auto& elem : list_types) {
    const std::string list_name = elem + "*";
    const int list_id = g.nonterminal_index_.at(list_name);
    Production cons;
    cons.id = static_cast<int>(g.productions_.size());
    cons.lhs = list_id;
    cons.constructor = list_name + ".cons";
    cons.synthetic = true;
    cons.fields.push_back(Field{"head", elem, false, g.nonterminal_index_.at(elem)});
    cons.fields.push_back(Field{"tail", list_name, false, list_id});
    g.constructor_index_.emplace(cons.constructor, cons.id);
    g.by_lhs_[static_cast<std::size_t>(list_id)].push_back(cons.id);
    g.productions_.push_back(std::move(cons));

    Production nil;
    nil.id = static_cast<int>(g.productions_.size());
    nil.lhs = list_id;
    nil.constructor = list_name + ".nil";
    nil.synthetic = true;
    g.constructor_index_.emplace(nil.constructor, nil.id);
    g.by_lhs_[static_cast<std::size_t>(list_id)].push_back(nil.id);
    g.productions_.push_back(std::move(nil));
  }

  // Every nonterminal must derive at least one finite tree, otherwise a
  // decoder could be steered into a derivation that never completes.
  std::vector<bool> productive(g.nonterminals_.size(), false);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& p : g.productions_) {
      if (productive[static_cast<std::size_t>(p.lhs)]) continue;
      bool ok = true;
      for (const auto& f : p.fields) ok = ok && (f.is_token() || productive[static_cast<std::size_t>(f.slot)]);
      if (ok) {
        productive[static_cast<std::size_t>(p.lhs)] = true;
        changed = true;
      }
    }
  }
  for (std::size_t i = 0; i < productive.size(); ++i) {
    if (!productive[i]) {
      throw GrammarError(GrammarError::Kind::Unproductive, 0,
                         "nonterminal '" + g.nonterminals_[i] + "' derives no finite tree");
    }
  }
  return g;
}

Grammar Grammar::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open grammar file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

int Grammar::nonterminal_id(std::string_view name) const {
  auto it = nonterminal_index_.find(std::string(name));
  return it == nonterminal_index_.end() ? -1 : it->second;
}

std::optional<int> Grammar::find_constructor(std::string_view name) const {
  auto it = constructor_index_.find(std::string(name));
  if (it == constructor_index_.end()) return std::nullopt;
  return it->second;
}

bool Grammar::has_token_fields() const {
  for (const auto& p : productions_) {
    for (const auto& f : p.fields) {
      if (f.is_token()) return true;
    }
  }
  return false;
}

std::size_t Grammar::max_arity() const {
  std::size_t n = 0;
  for (const auto& p : productions_) n = std::max(n, p.fields.size());
  return n;
}

std::string Grammar::canonical_text() const {
  std::string out;
  for (const auto& p : productions_) {
    if (p.synthetic) continue;
    out += nonterminals_[static_cast<std::size_t>(p.lhs)];
    out += " -> ";
    out += p.constructor;
    out += '(';
    for (std::size_t i = 0; i < p.fields.size(); ++i) {
      if (i) out += ", ";
      out += p.fields[i].name;
      out += ':';
      out += p.fields[i].type;
      if (p.fields[i].is_sequence) out += '*';
    }
    out += ")\n";
  }
  return out;
}

std::uint64_t Grammar::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace astgan
