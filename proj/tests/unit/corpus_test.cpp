#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "astgan/code_syntax.hpp"
#include "astgan/corpus.hpp"
#include "test_support.hpp"

using namespace astgan;
using astgan::testing::bundled_dev;
using astgan::testing::bundled_train;
using astgan::testing::jobs_grammar;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  auto p = std::filesystem::temp_directory_path() / ("astgan_corpus_test_" + name);
  std::ofstream(p, std::ios::binary) << contents;
  return p;
}

}  // namespace

TEST(Tokenize, LowercasesSplitsPunctuationKeepsQuotes) {
  EXPECT_EQ(tokenize("Which jobs, in Austin?"), (std::vector<std::string>{"which", "jobs", ",", "in", "austin", "?"}));
  EXPECT_EQ(tokenize("say \"Hello World\" now"), (std::vector<std::string>{"say", "hello world", "now"}));
  EXPECT_TRUE(tokenize("   ").empty());
}

TEST(Corpus, BundledCorpusLoadsAndRoundtrips) {
  EXPECT_EQ(bundled_train().size(), 200u);
  EXPECT_EQ(bundled_dev().size(), 50u);
  for (const auto& ex : bundled_train()) {
    EXPECT_EQ(render_code(ex.ast, jobs_grammar()), ex.code);
    EXPECT_EQ(ex.nl, tokenize(ex.nl_text));
  }
}

TEST(Corpus, EmptyFileIsAnEmptyCorpus) {
  EXPECT_TRUE(load_corpus(temp_file("empty.jsonl", ""), jobs_grammar()).empty());
}

TEST(Corpus, BadRecordsNameLineAndId) {
  try {
    load_corpus(temp_file("bad_code.jsonl",
                          "{\"id\":\"a\",\"nl\":\"jobs\",\"code\":\"answer(last(loc(austin)))\"}\n"
                          "{\"id\":\"b7\",\"nl\":\"jobs\",\"code\":\"answer(nope)\"}\n"),
                jobs_grammar());
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.record_id(), "b7");
  }
  try {
    load_corpus(temp_file("bad_json.jsonl", "{\"id\":\"a\",\n"), jobs_grammar());
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  EXPECT_THROW(load_corpus(temp_file("missing.jsonl", "{\"id\":\"a\",\"nl\":\"x\"}\n"), jobs_grammar()), CorpusError);
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl", jobs_grammar()), std::runtime_error);
}

TEST(Corpus, WriteThenLoadIsIdentity) {
  Rng rng(2);
  auto c = generate_synthetic_corpus(jobs_grammar(), 20, rng);
  auto p = std::filesystem::temp_directory_path() / "astgan_corpus_test_rt.jsonl";
  write_corpus(p, c);
  auto back = load_corpus(p, jobs_grammar());
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(back[i].id, c[i].id);
    EXPECT_EQ(back[i].nl, c[i].nl);
    EXPECT_EQ(back[i].ast, c[i].ast);
  }
}

TEST(Synthetic, SingleExampleParses) {
  Rng rng(1);
  auto c = generate_synthetic_corpus(jobs_grammar(), 1, rng);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(parse_code(c[0].code, jobs_grammar()), c[0].ast);
  EXPECT_FALSE(c[0].nl.empty());
}

TEST(Synthetic, DeterministicAndRoundtrips) {
  Rng a(42), b(42);
  auto x = generate_synthetic_corpus(jobs_grammar(), 300, a);
  auto y = generate_synthetic_corpus(jobs_grammar(), 300, b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].nl_text, y[i].nl_text);
    EXPECT_EQ(x[i].code, y[i].code);
    EXPECT_EQ(render_code(parse_code(x[i].code, jobs_grammar()), jobs_grammar()), x[i].code);
  }
}

TEST(Synthetic, EntitiesOutsideTheGenerationVocabulary) {
  // Counted on the bundled split: a dev example needs copying when one of its
  // code tokens is missing from the vocabulary built on train.
  const auto v = build_vocab(bundled_train(), 2, 40, jobs_grammar());
  std::size_t with_oov = 0;
  for (const auto& ex : bundled_dev()) {
    bool oov = false;
    for (const auto& t : code_tokens(ex.ast)) oov = oov || !v.code.contains(t);
    with_oov += oov;
  }
  EXPECT_GE(static_cast<double>(with_oov) / bundled_dev().size(), 0.2);

  // And inside train itself, against the frequency-filtered vocabulary.
  std::size_t train_oov = 0;
  for (const auto& ex : bundled_train()) {
    bool oov = false;
    for (const auto& t : code_tokens(ex.ast)) oov = oov || !v.code.contains(t);
    train_oov += oov;
  }
  EXPECT_GE(static_cast<double>(train_oov) / bundled_train().size(), 0.2);
}

TEST(Vocabulary, ReservedIdsAndCutoff) {
  auto v = Vocabulary::build({{"a", "b", "a"}, {"c", "a", "b"}}, 2);
  EXPECT_EQ(v.id("<pad>"), Vocabulary::kPad);
  EXPECT_EQ(v.size(), Vocabulary::kReserved + 2);
  EXPECT_EQ(v.token(Vocabulary::kReserved), "a");  // most frequent first
  EXPECT_EQ(v.token(Vocabulary::kReserved + 1), "b");
  EXPECT_EQ(v.id("c"), Vocabulary::kUnk);
  EXPECT_EQ(v.encode({"a", "zzz"}), (std::vector<std::size_t>{Vocabulary::kReserved, Vocabulary::kUnk}));
  auto all = Vocabulary::build({{"a", "b", "a"}, {"c", "a", "b"}}, 1);
  EXPECT_EQ(all.kept_tokens(), (std::vector<std::string>{"a", "b", "c"}));
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all.id(all.token(i)), i);
}

TEST(Vocabulary, StableAcrossBuilds) {
  auto a = build_vocab(bundled_train(), 2, 40, jobs_grammar());
  auto b = build_vocab(bundled_train(), 2, 40, jobs_grammar());
  EXPECT_EQ(a.nl, b.nl);
  EXPECT_EQ(a.code, b.code);
}

TEST(Vocabulary, ActionSpaceSizeArithmetic) {
  auto v = build_vocab(bundled_train(), 2, 40, jobs_grammar());
  EXPECT_EQ(v.actions.size(), jobs_grammar().num_productions() + v.code.kept_tokens().size() + 1 + 40);
  EXPECT_THROW(build_vocab({}, 2, 40, jobs_grammar()), std::invalid_argument);
}
