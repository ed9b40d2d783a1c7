#include "astgan/model.hpp"

#include <nlohmann/json.hpp>

namespace astgan {

using nlohmann::ordered_json;

Model Model::create(const Config& config, const Grammar& grammar, const std::vector<Example>& train, Rng& rng) {
  Model m{config, grammar, {}, {}, {}, {}, ParameterStore(config.seed), ParameterStore(config.seed)};
  auto v = build_vocab(train, config.min_freq, config.max_input_len, grammar);
  m.nl_vocab = std::move(v.nl);
  m.code_vocab = std::move(v.code);
  m.actions = std::move(v.actions);
  std::vector<std::vector<std::string>> dis_seqs;
  for (const auto& ex : train) {
    for (auto& s : discriminator_sequences(ex)) dis_seqs.push_back(std::move(s));
  }
  m.dis_vocab = Vocabulary::build(dis_seqs, config.min_freq);
  Rng gen_rng = rng.fork();
  Rng dis_rng = rng.fork();
  Generator::init_params(m.gen, m.grammar, m.nl_vocab, m.actions, m.gen_dims(), gen_rng);
  Discriminator::init_params(m.dis, m.grammar, m.dis_vocab, m.dis_dims(), dis_rng);
  return m;
}

Checkpoint Model::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.grammar_hash = grammar.fingerprint();
  ordered_json echo;
  echo["config"] = config.echo();
  echo["nl_vocab"] = nl_vocab.kept_tokens();
  echo["code_vocab"] = code_vocab.kept_tokens();
  echo["dis_vocab"] = dis_vocab.kept_tokens();
  ckpt.echo = echo.dump();
  for (const auto* store : {&gen, &dis}) {
    for (const auto& [name, v] : store->entries()) {
      ckpt.entries.push_back({name, v.shape(), std::vector<float>(v.data().begin(), v.data().end())});
    }
  }
  return ckpt;
}

Model Model::from_checkpoint(const Checkpoint& ckpt, const std::optional<Grammar>& grammar) {
  ordered_json echo;
  try {
    echo = ordered_json::parse(ckpt.echo);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(CheckpointError::Kind::Malformed, std::string("unreadable config echo: ") + e.what());
  }
  Model m;
  m.config = Config::parse(echo.at("config").get<std::string>());
  m.grammar = grammar ? *grammar : Grammar::load_file(m.config.grammar);
  if (m.grammar.fingerprint() != ckpt.grammar_hash) {
    throw CheckpointError(CheckpointError::Kind::HashMismatch,
                          "checkpoint was trained on a different grammar (hash mismatch)");
  }
  m.nl_vocab = Vocabulary::from_tokens(echo.at("nl_vocab").get<std::vector<std::string>>());
  m.code_vocab = Vocabulary::from_tokens(echo.at("code_vocab").get<std::vector<std::string>>());
  m.dis_vocab = Vocabulary::from_tokens(echo.at("dis_vocab").get<std::vector<std::string>>());
  m.actions = ActionSpace(m.grammar.num_productions(), m.code_vocab.kept_tokens(), m.config.max_input_len);
  m.gen = ParameterStore(m.config.seed);
  m.dis = ParameterStore(m.config.seed);
  for (const auto& e : ckpt.entries) {
    auto value = Value::leaf(e.shape, e.data, true);
    if (e.name.starts_with("gen.")) {
      m.gen.add(e.name, std::move(value));
    } else if (e.name.starts_with("dis.")) {
      m.dis.add(e.name, std::move(value));
    } else {
      throw CheckpointError(CheckpointError::Kind::Malformed, "unexpected parameter '" + e.name + "'");
    }
  }
  try {
    (void)m.generator();
    (void)m.discriminator();
  } catch (const std::exception& e) {
    throw CheckpointError(CheckpointError::Kind::Malformed, std::string("checkpoint parameters: ") + e.what());
  }
  return m;
}

}  // namespace astgan
