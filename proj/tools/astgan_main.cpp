// astgan: corpus generation, training, evaluation and generation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "astgan/checkpoint.hpp"
#include "astgan/code_syntax.hpp"
#include "astgan/config.hpp"
#include "astgan/corpus.hpp"
#include "astgan/grammar.hpp"
#include "astgan/model.hpp"
#include "astgan/training.hpp"

namespace fs = std::filesystem;
using namespace astgan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCollapse = 3;
constexpr int kExitIo = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Grammar load_grammar(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("grammar file not found: " + p.string());
  return Grammar::load_file(p);
}

std::vector<Example> load_split(const fs::path& p, const Grammar& g) {
  if (!fs::exists(p)) throw IoError("corpus file not found: " + p.string());
  return load_corpus(p, g);
}

void apply_overrides(Config& c, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(kv, "--set expects key=value");
    c.set(kv.substr(0, eq), kv.substr(eq + 1), fs::current_path());
  }
}

Config load_config(const std::string& path, const std::vector<std::string>& sets, const std::string& regime,
                   const std::optional<std::uint64_t>& seed) {
  if (!fs::exists(path)) throw IoError("config file not found: " + path);
  Config c = Config::load(path);
  apply_overrides(c, sets);
  if (!regime.empty()) c.set("regime", regime);
  if (seed) c.seed = *seed;
  c.validate();
  return c;
}

Model load_model(const fs::path& ckpt_path) {
  if (!fs::exists(ckpt_path)) throw IoError("checkpoint not found: " + ckpt_path.string());
  return Model::from_checkpoint(load_checkpoint(ckpt_path));
}

// ---------------------------------------------------------------------------

struct MakeCorpusArgs {
  std::string grammar, out, dev_out;
  std::size_t n = 250, dev_n = 0;
  std::uint64_t seed = 1;
  bool force = false;
};

int cmd_make_corpus(const MakeCorpusArgs& a) {
  const Grammar g = load_grammar(a.grammar);
  if (a.n == 0) throw UsageError("--n must be at least 1");
  if (a.dev_n >= a.n && !a.dev_out.empty()) throw UsageError("--dev-n must be smaller than --n");
  if (!a.dev_out.empty() && a.dev_n == 0) throw UsageError("--dev-out needs --dev-n");
  for (const auto& p : {a.out, a.dev_out}) {
    if (!p.empty() && fs::exists(p) && !a.force) throw IoError(p + " exists; pass --force to overwrite");
  }
  Rng rng(a.seed);
  auto examples = generate_synthetic_corpus(g, a.n, rng);
  if (a.dev_out.empty()) {
    write_corpus(a.out, examples);
  } else {
    std::vector<Example> dev(examples.end() - static_cast<std::ptrdiff_t>(a.dev_n), examples.end());
    examples.resize(a.n - a.dev_n);
    write_corpus(a.out, examples);
    write_corpus(a.dev_out, dev);
  }
  return kExitOk;
}

struct TrainArgs {
  std::string config, regime, out_ckpt, metrics;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

struct RegimeRun {
  TrainResult result;
  Model model;
};

RegimeRun run_training(const Config& c, std::ostream* metrics_out, std::ostream& log) {
  const Grammar g = load_grammar(c.grammar);
  const auto train = load_split(c.train, g);
  const auto dev = load_split(c.dev, g);
  Rng rng(c.seed);
  Model m = Model::create(c, g, train, rng);
  auto sink = [&](const MetricsRow& row) {
    const std::string line = format_metrics(row);
    if (metrics_out) *metrics_out << line << '\n' << std::flush;
  };
  log << "regime " << to_string(c.regime) << ": " << train.size() << " train / " << dev.size()
      << " dev examples, action space " << m.actions.size() << '\n';
  auto result = train_regime(m, train, dev, rng, sink);
  return {std::move(result), std::move(m)};
}

int cmd_train(const TrainArgs& a) {
  const Config c = load_config(a.config, a.sets, a.regime, a.seed);
  std::ofstream metrics_file;
  if (!a.metrics.empty()) {
    metrics_file.open(a.metrics, std::ios::binary | std::ios::trunc);
    if (!metrics_file) throw IoError("cannot write " + a.metrics);
  }
  std::ostream* out = a.metrics.empty() ? &std::cout : static_cast<std::ostream*>(&metrics_file);
  auto run = run_training(c, out, std::cerr);
  if (!a.out_ckpt.empty()) save_checkpoint(a.out_ckpt, run.model.to_checkpoint());
  std::fprintf(stderr, "best dev exact match: %.4f\n", run.result.best_dev);
  if (run.result.dis_pretrain_accuracy) {
    std::fprintf(stderr, "discriminator held-out accuracy after pretraining: %.4f\n",
                 *run.result.dis_pretrain_accuracy);
  }
  if (run.result.status == TrainStatus::Collapse) {
    std::fprintf(stderr, "GAN collapse: mean reward stayed below %g for %zu epochs\n", c.collapse_reward,
                 c.collapse_epochs);
    return kExitCollapse;
  }
  return kExitOk;
}

struct EvalArgs {
  std::string ckpt, split = "dev";
  std::optional<std::size_t> beam;
  bool verbose = false;
};

int cmd_eval(const EvalArgs& a) {
  const Model m = load_model(a.ckpt);
  fs::path path = a.split == "dev" ? m.config.dev : a.split == "train" ? m.config.train : fs::path(a.split);
  const auto split = load_split(path, m.grammar);
  if (split.empty()) throw UsageError("split " + path.string() + " is empty");
  const std::size_t beam = a.beam.value_or(m.config.beam_width);
  if (beam == 0) throw UsageError("--beam must be at least 1");
  const auto r = evaluate_exact_match(m, split, beam, m.config.max_steps);
  if (a.verbose) {
    for (std::size_t i = 0; i < split.size(); ++i) {
      std::printf("%s\t%s\t%s\n", r.correct[i] ? "PASS" : "FAIL", split[i].id.c_str(),
                  r.predictions[i].empty() ? "<none>" : r.predictions[i].c_str());
    }
  }
  std::printf("exact match: %.4f\n", r.accuracy);
  return kExitOk;
}

struct GenerateArgs {
  std::string ckpt, nl;
  std::optional<std::size_t> beam;
};

int cmd_generate(const GenerateArgs& a) {
  const auto tokens = tokenize(a.nl);
  if (tokens.empty()) throw UsageError("empty utterance");
  const Model m = load_model(a.ckpt);
  if (tokens.size() > m.config.max_input_len) {
    throw UsageError("utterance has " + std::to_string(tokens.size()) + " tokens; limit is " +
                     std::to_string(m.config.max_input_len));
  }
  const std::size_t beam = a.beam.value_or(m.config.beam_width);
  if (beam == 0) throw UsageError("--beam must be at least 1");
  const auto gen = m.generator();
  for (const auto& c : gen.beam_search(tokens, beam, m.config.max_steps)) {
    std::printf("%.6f\t%s\n", c.log_prob, render_code(actions_to_ast(c.actions, m.grammar), m.grammar).c_str());
  }
  return kExitOk;
}

struct CompareArgs {
  std::string config, out_dir;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

// Trains every regime from the same seed and prints one row per regime.
int cmd_compare(const CompareArgs& a) {
  if (!a.out_dir.empty()) fs::create_directories(a.out_dir);
  std::printf("regime\tdev_exact_match\tstatus\tdis_pretrain_accuracy\n");
  for (Regime r : {Regime::Mle, Regime::Gan, Regime::GanPretrain}) {
    const Config c = load_config(a.config, a.sets, std::string(to_string(r)), a.seed);
    std::ofstream metrics_file;
    std::ostream* out = nullptr;
    if (!a.out_dir.empty()) {
      const fs::path p = fs::path(a.out_dir) / (std::string(to_string(r)) + ".metrics.tsv");
      metrics_file.open(p, std::ios::binary | std::ios::trunc);
      if (!metrics_file) throw IoError("cannot write " + p.string());
      out = &metrics_file;
    }
    auto run = run_training(c, out, std::cerr);
    if (!a.out_dir.empty()) {
      save_checkpoint(fs::path(a.out_dir) / (std::string(to_string(r)) + ".ckpt"), run.model.to_checkpoint());
    }
    char acc[32] = "-";
    if (run.result.dis_pretrain_accuracy) std::snprintf(acc, sizeof acc, "%.4f", *run.result.dis_pretrain_accuracy);
    std::printf("%s\t%.4f\t%s\t%s\n", std::string(to_string(r)).c_str(), run.result.best_dev,
                run.result.status == TrainStatus::Ok ? "ok" : "collapse", acc);
    std::fflush(stdout);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grammar-constrained NL-to-code generation with adversarial training"};
  app.require_subcommand(1);

  MakeCorpusArgs mc;
  auto* make = app.add_subcommand("make-corpus", "Write a synthetic job-query corpus (JSON lines)");
  make->add_option("--grammar", mc.grammar, "Grammar file")->required();
  make->add_option("--out", mc.out, "Output corpus")->required();
  make->add_option("--n", mc.n, "Number of examples")->required();
  make->add_option("--seed", mc.seed, "Random seed");
  make->add_option("--dev-out", mc.dev_out, "Also write the last --dev-n examples here");
  make->add_option("--dev-n", mc.dev_n, "Examples moved to --dev-out");
  make->add_flag("--force", mc.force, "Overwrite existing files");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train one regime and write the best-dev checkpoint");
  train->add_option("--config", tr.config, "Config file")->required();
  train->add_option("--regime", tr.regime, "mle, gan or gan_pretrain (overrides the config)");
  train->add_option("--out-ckpt", tr.out_ckpt, "Checkpoint path");
  train->add_option("--metrics", tr.metrics, "Metrics log path (default: stdout)");
  train->add_option("--set", tr.sets, "Config override key=value (repeatable)");
  train->add_option("--seed", tr.seed, "Seed override");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Exact-match accuracy of a checkpoint");
  eval->add_option("--ckpt", ev.ckpt, "Checkpoint")->required();
  eval->add_option("--split", ev.split, "train, dev or a corpus path");
  eval->add_option("--beam", ev.beam, "Beam width");
  eval->add_flag("--verbose", ev.verbose, "List every example");

  GenerateArgs ge;
  auto* generate = app.add_subcommand("generate", "Decode one utterance");
  generate->add_option("--ckpt", ge.ckpt, "Checkpoint")->required();
  generate->add_option("--nl", ge.nl, "Utterance")->required();
  generate->add_option("--beam", ge.beam, "Beam width");

  CompareArgs cp;
  auto* compare = app.add_subcommand("compare", "Train all three regimes and print a dev exact-match table");
  compare->add_option("--config", cp.config, "Config file")->required();
  compare->add_option("--out-dir", cp.out_dir, "Directory for per-regime metrics and checkpoints");
  compare->add_option("--set", cp.sets, "Config override key=value (repeatable)");
  compare->add_option("--seed", cp.seed, "Seed override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*make) return cmd_make_corpus(mc);
    if (*train) return cmd_train(tr);
    if (*eval) return cmd_eval(ev);
    if (*generate) return cmd_generate(ge);
    if (*compare) return cmd_compare(cp);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitIo;
  } catch (const CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return kExitIo;
  } catch (const CorpusError& e) {
    std::fprintf(stderr, "corpus error: %s\n", e.what());
    return kExitIo;
  } catch (const GrammarError& e) {
    std::fprintf(stderr, "grammar error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
