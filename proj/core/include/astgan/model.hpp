#pragma once

// Grammar, vocabularies and both parameter stores travelling together, plus
// conversion to and from checkpoints.

#include <optional>
#include <vector>

#include "astgan/checkpoint.hpp"
#include "astgan/config.hpp"
#include "astgan/corpus.hpp"
#include "astgan/discriminator.hpp"
#include "astgan/generator.hpp"
#include "astgan/grammar.hpp"
#include "astgan/params.hpp"
#include "astgan/rng.hpp"

namespace astgan {

struct Model {
  Config config;
  Grammar grammar;
  Vocabulary nl_vocab;
  Vocabulary code_vocab;
  Vocabulary dis_vocab;
  ActionSpace actions;
  ParameterStore gen;
  ParameterStore dis;

  ModelDims gen_dims() const { return {config.embed_size, config.hidden_size, config.max_input_len}; }
  DisDims dis_dims() const { return {config.dis_embed_size, config.dis_hidden_size, config.dis_flat_encoder}; }

  // Builds vocabularies from `train` and initializes both stores from `rng`.
  static Model create(const Config& config, const Grammar& grammar, const std::vector<Example>& train, Rng& rng);

  // The returned objects point into this model; do not move it while they live.
  Generator generator() const { return Generator(grammar, nl_vocab, actions, gen_dims(), gen); }
  Discriminator discriminator() const { return Discriminator(grammar, dis_vocab, dis_dims(), dis); }

  Checkpoint to_checkpoint() const;
  // Reads the grammar named in the checkpoint's config echo unless one is
  // given; throws CheckpointError on a grammar hash mismatch.
  static Model from_checkpoint(const Checkpoint& ckpt, const std::optional<Grammar>& grammar = std::nullopt);
};

}  // namespace astgan
