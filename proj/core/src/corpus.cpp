#include "astgan/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>

#include "astgan/code_syntax.hpp"

namespace astgan {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (c == '"') {
      flush();
      const std::size_t close = text.find('"', i + 1);
      if (close == std::string_view::npos) {
        out.emplace_back("\"");
        continue;
      }
      std::string quoted;
      for (std::size_t j = i + 1; j < close; ++j) {
        quoted += static_cast<char>(std::tolower(static_cast<unsigned char>(text[j])));
      }
      if (!quoted.empty()) out.push_back(std::move(quoted));
      i = close;
    } else if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c) && c != '_') {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      cur += static_cast<char>(std::tolower(c));
    }
  }
  flush();
  return out;
}

Example make_example(std::string id, std::string nl_text, std::string code, const Grammar& g) {
  Example ex;
  ex.id = std::move(id);
  ex.nl = tokenize(nl_text);
  ex.nl_text = std::move(nl_text);
  ex.ast = parse_code(code, g);
  validate_ast(ex.ast, g);
  const std::string rendered = render_code(ex.ast, g);
  if (rendered != code) {
    throw CodeParseError(0, "code is not in canonical form (re-renders as \"" + rendered + "\")");
  }
  ex.code = std::move(code);
  return ex;
}

std::vector<Example> load_corpus(const std::filesystem::path& path, const Grammar& g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus file '" + path.string() + "'");
  std::vector<Example> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw CorpusError(line_no, "", std::string("malformed JSON: ") + e.what());
    }
    for (const char* key : {"id", "nl", "code"}) {
      if (!rec.is_object() || !rec.contains(key) || !rec[key].is_string()) {
        throw CorpusError(line_no, "", std::string("missing or non-string field \"") + key + "\"");
      }
    }
    const std::string id = rec["id"].get<std::string>();
    try {
      out.push_back(make_example(id, rec["nl"].get<std::string>(), rec["code"].get<std::string>(), g));
    } catch (const std::invalid_argument& e) {
      throw CorpusError(line_no, id, std::string("code does not parse: ") + e.what());
    }
    if (out.back().nl.empty()) throw CorpusError(line_no, id, "utterance has no tokens");
  }
  if (out.empty()) std::cerr << "warning: corpus '" << path.string() << "' is empty\n";
  return out;
}

std::string to_jsonl_line(const Example& ex) {
  nlohmann::ordered_json rec;
  rec["id"] = ex.id;
  rec["nl"] = ex.nl_text;
  rec["code"] = ex.code;
  return rec.dump();
}

void write_corpus(const std::filesystem::path& path, const std::vector<Example>& examples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write corpus file '" + path.string() + "'");
  for (const auto& ex : examples) out << to_jsonl_line(ex) << '\n';
  if (!out) throw std::runtime_error("failed writing corpus file '" + path.string() + "'");
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
  tokens_ = {"<pad>", "<unk>", std::string(kEndToken)};
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sequences, std::size_t min_freq) {
  std::map<std::string, std::size_t> freq;
  for (const auto& seq : sequences) {
    for (const auto& t : seq) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : freq) {
    if (n >= std::max<std::size_t>(min_freq, 1)) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  for (auto& [tok, _] : kept) tokens.push_back(tok);
  return from_tokens(tokens);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& kept) {
  Vocabulary v;
  for (const auto& t : kept) {
    if (v.index_.contains(t)) continue;
    v.index_.emplace(t, v.tokens_.size());
    v.tokens_.push_back(t);
  }
  return v;
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::string> Vocabulary::kept_tokens() const {
  return {tokens_.begin() + static_cast<std::ptrdiff_t>(kReserved), tokens_.end()};
}

std::vector<std::size_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> code_tokens(const AstNode& ast) {
  std::vector<std::string> out;
  if (ast.is_leaf()) return ast.tokens;
  for (const auto& c : ast.children) {
    auto sub = code_tokens(c);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

Vocabularies build_vocab(const std::vector<Example>& examples, std::size_t min_freq, std::size_t max_input_len,
                         const Grammar& g) {
  if (examples.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::vector<std::vector<std::string>> nl, code;
  for (const auto& ex : examples) {
    nl.push_back(ex.nl);
    std::vector<std::string> toks;
    for (auto& t : code_tokens(ex.ast)) {
      if (is_code_token(t)) toks.push_back(std::move(t));
    }
    code.push_back(std::move(toks));
  }
  Vocabularies v{Vocabulary::build(nl, min_freq), Vocabulary::build(code, min_freq), {}};
  v.actions = ActionSpace(g.num_productions(), v.code.kept_tokens(), max_input_len);
  return v;
}

// ---------------------------------------------------------------------------
// Synthetic job queries

namespace {

struct EntityPool {
  std::vector<std::string> fixed;
  double open_rate = 0.0;  // probability of an invented name instead
};

struct ConstraintKind {
  const char* constructor;
  std::vector<const char*> phrases;  // "{}" marks the entity
  EntityPool pool;
  enum class Entity { Pool, Salary, Years } entity = Entity::Pool;
};

const std::vector<ConstraintKind>& constraint_kinds() {
  static const std::vector<ConstraintKind> kinds = {
      {"language",
       {"using {}", "that use {}", "knowing {}", "involving {}"},
       {{"java", "python", "perl", "lisp", "prolog", "javascript", "ruby", "haskell", "fortran", "cobol", "pascal",
         "delphi", "scala", "smalltalk"},
        0.3}},
      {"loc",
       {"in {}", "located in {}", "based in {}"},
       {{"austin", "dallas", "houston", "boston", "seattle", "denver", "chicago", "atlanta", "new york",
         "san antonio", "los angeles", "salt lake city"},
        0.2}},
      {"company",
       {"at {}", "for {}", "offered by {}"},
       {{"ibm", "microsoft", "oracle", "intel", "dell", "apple", "motorola", "compaq", "sun"}, 0.35}},
      {"title",
       {"as a {}", "with the title {}"},
       {{"developer", "programmer", "consultant", "system analyst", "web designer", "project manager",
         "database administrator"},
        0.0}},
      {"platform", {"on {}", "running {}"}, {{"windows", "unix", "linux", "vms", "solaris", "mac"}, 0.0}},
      {"salary_greater_than",
       {"paying more than {}", "with a salary above {}", "that pay over {}"},
       {},
       ConstraintKind::Entity::Salary},
      {"req_exp",
       {"requiring {} years of experience", "needing {} years experience", "with at least {} years of experience"},
       {},
       ConstraintKind::Entity::Years},
      {"req_deg",
       {"requiring a {} degree", "for people with a {}", "needing a {}"},
       {{"bs", "ms", "phd", "ba", "mba"}, 0.0}},
  };
  return kinds;
}

const std::vector<const char*> kPrefixes = {"what jobs are there", "what jobs", "show me jobs", "list jobs",
                                            "find jobs", "which jobs are", "are there any jobs", "give me jobs",
                                            "what are the jobs"};
const std::vector<const char*> kJoiners = {"and", "", ","};
const std::vector<const char*> kSuffixes = {"?", "", "."};
const std::vector<const char*> kSyllables = {"ka", "lo", "mi", "ra", "zu", "ten", "vor", "qi",
                                             "bel", "dax", "nor", "pim", "sul", "tre", "wex", "yal"};

template <class V>
const auto& pick(const V& v, Rng& rng) {
  return v[rng.uniform_int(v.size())];
}

std::string invented_name(Rng& rng) {
  const std::size_t n = 2 + rng.uniform_int(2);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += pick(kSyllables, rng);
  return s;
}

std::string fill(const char* phrase, const std::string& entity) {
  std::string p(phrase);
  const auto at = p.find("{}");
  return p.substr(0, at) + entity + p.substr(at + 2);
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct Constraint {
  AstNode ast;
  std::string phrase;
};

Constraint make_constraint(const Grammar& g, Rng& rng, bool allow_not) {
  auto ctor = [&g](const char* name) {
    auto id = g.find_constructor(name);
    if (!id) throw std::invalid_argument(std::string("synthetic corpus: grammar lacks constructor '") + name + "'");
    return *id;
  };
  if (allow_not && rng.bernoulli(0.08)) {
    Constraint inner = make_constraint(g, rng, false);
    return {AstNode::node(ctor("not"), {std::move(inner.ast)}), "not " + inner.phrase};
  }
  const auto& kind = pick(constraint_kinds(), rng);
  std::string entity;
  switch (kind.entity) {
    case ConstraintKind::Entity::Salary:
      entity = std::to_string((30 + rng.uniform_int(121)) * 1000);
      break;
    case ConstraintKind::Entity::Years:
      entity = std::to_string(1 + rng.uniform_int(10));
      break;
    case ConstraintKind::Entity::Pool:
      entity = rng.bernoulli(kind.pool.open_rate) ? invented_name(rng) : pick(kind.pool.fixed, rng);
      break;
  }
  const int id = ctor(kind.constructor);
  return {AstNode::node(id, {AstNode::leaf(split_words(entity))}), fill(pick(kind.phrases, rng), entity)};
}

}  // namespace

std::vector<Example> generate_synthetic_corpus(const Grammar& g, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("generate_synthetic_corpus: n must be >= 1");
  const auto answer = g.find_constructor("answer");
  const auto conj = g.find_constructor("and");
  const auto last = g.find_constructor("last");
  if (!answer || !conj || !last) {
    throw std::invalid_argument("synthetic corpus: grammar lacks answer/and/last constructors");
  }
  std::vector<Example> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rng.uniform();
    const std::size_t k = r < 0.35 ? 1 : (r < 0.75 ? 2 : 3);
    std::vector<Constraint> cs;
    for (std::size_t j = 0; j < k; ++j) cs.push_back(make_constraint(g, rng, true));

    std::string nl = pick(kPrefixes, rng);
    for (std::size_t j = 0; j < k; ++j) {
      if (j > 0) {
        const std::string joiner = pick(kJoiners, rng);
        if (joiner == ",") {
          nl += ",";
        } else if (!joiner.empty()) {
          nl += " " + joiner;
        }
      }
      nl += " " + cs[j].phrase;
    }
    nl += pick(kSuffixes, rng);

    AstNode goal = AstNode::node(*last, {std::move(cs.back().ast)});
    for (std::size_t j = k - 1; j-- > 0;) {
      goal = AstNode::node(*conj, {std::move(cs[j].ast), std::move(goal)});
    }
    AstNode root = AstNode::node(*answer, {std::move(goal)});

    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i);
    Example ex;
    ex.id = id;
    ex.nl_text = nl;
    ex.nl = tokenize(nl);
    ex.code = render_code(root, g);
    ex.ast = std::move(root);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace astgan
