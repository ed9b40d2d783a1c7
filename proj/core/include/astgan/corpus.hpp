#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "astgan/ast.hpp"
#include "astgan/grammar.hpp"
#include "astgan/rng.hpp"
#include "astgan/transition.hpp"

namespace astgan {

// Lowercases, splits on whitespace and punctuation (each punctuation mark is
// its own token) and keeps double-quoted strings intact as one token.
std::vector<std::string> tokenize(std::string_view text);

struct Example {
  std::string id;
  std::string nl_text;
  std::vector<std::string> nl;
  std::string code;
  AstNode ast;
};

class CorpusError : public std::runtime_error {
 public:
  CorpusError(std::size_t line, std::string record_id, const std::string& why)
      : std::runtime_error(format(line, record_id, why)), line_(line), record_id_(std::move(record_id)) {}
  std::size_t line() const { return line_; }
  const std::string& record_id() const { return record_id_; }

 private:
  static std::string format(std::size_t line, const std::string& id, const std::string& why) {
    std::string s = "corpus line " + std::to_string(line);
    if (!id.empty()) s += " (record '" + id + "')";
    return s + ": " + why;
  }
  std::size_t line_;
  std::string record_id_;
};

// Builds an Example from raw fields; throws CodeParseError/IllTypedAst when
// the code does not parse or does not re-render to itself.
Example make_example(std::string id, std::string nl_text, std::string code, const Grammar& g);

// One JSON object per line with string fields "id", "nl" and "code".
std::vector<Example> load_corpus(const std::filesystem::path& path, const Grammar& g);
void write_corpus(const std::filesystem::path& path, const std::vector<Example>& examples);
std::string to_jsonl_line(const Example& ex);

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kEnd = 2;
  static constexpr std::size_t kReserved = 3;

  Vocabulary();
  // Keeps tokens seen at least min_freq times, ordered by descending
  // frequency then lexicographically.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sequences, std::size_t min_freq);
  static Vocabulary from_tokens(const std::vector<std::string>& kept);

  std::size_t id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.contains(token); }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  // Non-reserved tokens in id order.
  std::vector<std::string> kept_tokens() const;
  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::vector<std::string> code_tokens(const AstNode& ast);

struct Vocabularies {
  Vocabulary nl;
  Vocabulary code;
  ActionSpace actions;
};

Vocabularies build_vocab(const std::vector<Example>& examples, std::size_t min_freq, std::size_t max_input_len,
                         const Grammar& g);

// Synthetic job-query pairs over the bundled job-query grammar. Entity names
// come partly from open-ended generated lists so that copying is required.
std::vector<Example> generate_synthetic_corpus(const Grammar& g, std::size_t n, Rng& rng);

}  // namespace astgan
