#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "astgan/checkpoint.hpp"
#include "astgan/model.hpp"
#include "astgan/training.hpp"
#include "test_support.hpp"

using namespace astgan;
using astgan::testing::asset;
using astgan::testing::bundled_dev;
using astgan::testing::bundled_train;
using astgan::testing::jobs_grammar;

namespace {

Model small_model(std::uint64_t seed = 3) {
  Config c;
  c.grammar = asset("jobs.grammar");
  c.train = asset("train.jsonl");
  c.dev = asset("dev.jsonl");
  c.embed_size = 8;
  c.hidden_size = 12;
  c.dis_embed_size = 8;
  c.dis_hidden_size = 6;
  c.seed = seed;
  Rng rng(seed);
  return Model::create(c, jobs_grammar(), bundled_train(), rng);
}

CheckpointError::Kind kind_of(const std::string& bytes) {
  try {
    deserialize_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return CheckpointError::Kind::Io;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Checkpoint, LayoutOfASmallFile) {
  Checkpoint c;
  c.grammar_hash = 0x0102030405060708ull;
  c.echo = "{}";
  c.entries.push_back({"w", {2}, {1.0f, -2.5f}});
  const std::string b = serialize_checkpoint(c);
  EXPECT_EQ(b.substr(0, 4), "GANC");
  EXPECT_EQ(b.substr(4, 4), std::string("\x01\x00\x00\x00", 4));
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 0x08);  // little-endian hash
  EXPECT_EQ(static_cast<unsigned char>(b[15]), 0x01);
  // magic 4 + version 4 + hash 8 + echo (4 + 2) + count 4
  // + entry: name (2 + 1) + rank 1 + dims 4 + data 8
  EXPECT_EQ(b.size(), 4u + 4 + 8 + 6 + 4 + 3 + 1 + 4 + 8);
  float last;
  std::memcpy(&last, b.data() + b.size() - 4, 4);
  EXPECT_EQ(last, -2.5f);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const Model m = small_model();
  const auto dir = std::filesystem::temp_directory_path();
  save_checkpoint(dir / "astgan_ckpt_a.bin", m.to_checkpoint());
  const Model back = Model::from_checkpoint(load_checkpoint(dir / "astgan_ckpt_a.bin"));
  save_checkpoint(dir / "astgan_ckpt_b.bin", back.to_checkpoint());
  EXPECT_EQ(read_file(dir / "astgan_ckpt_a.bin"), read_file(dir / "astgan_ckpt_b.bin"));
  EXPECT_EQ(back.nl_vocab, m.nl_vocab);
  EXPECT_EQ(back.code_vocab, m.code_vocab);
  EXPECT_EQ(back.dis_vocab, m.dis_vocab);
  EXPECT_EQ(back.config.echo(), m.config.echo());
}

TEST(Checkpoint, ReloadedModelReproducesAccuracyAndScores) {
  Model m = small_model(5);
  auto opt = AdamState::for_store(m.gen, {.lr = 0.01});
  Rng rng(1);
  std::vector<Example> few(bundled_train().begin(), bundled_train().begin() + 8);
  for (int e = 0; e < 3; ++e) mle_epoch(m, few, opt, 4, rng);
  const Model back = Model::from_checkpoint(m.to_checkpoint());
  std::vector<Example> dev(bundled_dev().begin(), bundled_dev().begin() + 10);
  auto a = evaluate_exact_match(m, dev, 3, 100);
  auto b = evaluate_exact_match(back, dev, 3, 100);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.predictions, b.predictions);
  const auto& ex = dev[0];
  EXPECT_EQ(m.discriminator().score(ex.nl, ex.ast).p_sim(), back.discriminator().score(ex.nl, ex.ast).p_sim());
}

TEST(Checkpoint, EveryTruncationIsReported) {
  const std::string b = serialize_checkpoint(small_model().to_checkpoint());
  // Sampled cut points, including mid-array ones.
  for (std::size_t cut = 4; cut < b.size(); cut += 1 + cut / 7) {
    EXPECT_EQ(kind_of(b.substr(0, cut)), CheckpointError::Kind::Truncated) << cut;
  }
  EXPECT_EQ(kind_of(b.substr(0, b.size() - 1)), CheckpointError::Kind::Truncated);
}

TEST(Checkpoint, DistinctErrorKinds) {
  const std::string b = serialize_checkpoint(small_model().to_checkpoint());
  EXPECT_EQ(kind_of("GAN"), CheckpointError::Kind::BadMagic);
  EXPECT_EQ(kind_of("XANC" + b.substr(4)), CheckpointError::Kind::BadMagic);
  std::string v2 = b;
  v2[4] = 2;
  EXPECT_EQ(kind_of(v2), CheckpointError::Kind::VersionMismatch);
  EXPECT_EQ(kind_of(b + "x"), CheckpointError::Kind::Malformed);

  const auto path = std::filesystem::temp_directory_path() / "astgan_ckpt_hash.bin";
  std::ofstream(path, std::ios::binary) << b;
  try {
    load_checkpoint(path, jobs_grammar().fingerprint() + 1);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::HashMismatch);
  }
  try {
    Model::from_checkpoint(load_checkpoint(path), Grammar::parse("S -> Lit(v:token)"));
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::HashMismatch);
  }
  try {
    load_checkpoint("/nonexistent/dir/x.ckpt");
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::Io);
  }
}

TEST(Checkpoint, MissingParameterIsMalformed) {
  Checkpoint c = small_model().to_checkpoint();
  c.entries.pop_back();
  try {
    Model::from_checkpoint(c);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::Malformed);
  }
}
