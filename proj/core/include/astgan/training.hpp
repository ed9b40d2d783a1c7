#pragma once

// Generator MLE, discriminator training and the adversarial loop with
// policy-gradient generator updates driven by the discriminator's score.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "astgan/config.hpp"
#include "astgan/corpus.hpp"
#include "astgan/discriminator.hpp"
#include "astgan/generator.hpp"
#include "astgan/model.hpp"
#include "astgan/params.hpp"
#include "astgan/rng.hpp"

namespace astgan {

// One metrics line: epoch label, mle_nll, d_loss, mean_reward,
// dev_exact_match. Missing values print as "-".
struct MetricsRow {
  std::string epoch;
  std::optional<double> mle_nll;
  std::optional<double> d_loss;
  std::optional<double> mean_reward;
  std::optional<double> dev_exact_match;
};

std::string format_metrics(const MetricsRow& row);

struct TrainState {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::optional<double> baseline;  // set from the first policy-gradient batch
  std::vector<MetricsRow> history;
};

struct Optimizers {
  AdamState gen;
  AdamState dis;

  static Optimizers for_model(const Model& m);
};

// ---------------------------------------------------------------------------
// Generator likelihood

// Mean over `batch` of -sequence_log_prob.
template <class T>
BasicValue<T> mle_loss(const BasicGenerator<T>& gen, const std::vector<const Example*>& batch);

// One shuffled pass of minibatch Adam on the generator; returns the mean
// per-example negative log-likelihood observed during the pass.
double mle_epoch(Model& m, const std::vector<Example>& corpus, AdamState& opt, std::size_t batch_size, Rng& rng);

// ---------------------------------------------------------------------------
// Discriminator

// A complete derivation from the uniform legal policy; nullopt if none of
// `tries` attempts finishes within max_steps.
std::optional<AstNode> random_policy_tree(const Model& m, const std::vector<std::string>& nl, Rng& rng,
                                          std::size_t max_steps, std::size_t tries = 100);

// Half real pairs; the other half fakes. Mixed fakes split between generator
// samples and mismatched gold pairs; samples that fail to complete or equal
// the gold tree are replaced by uniform-policy derivations.
std::vector<LabeledPair> make_discriminator_batch(const Model& m, const std::vector<Example>& corpus,
                                                  std::size_t batch_size, FakeSource source, Rng& rng);

// Each example once as a real pair and once against a uniform-policy fake.
std::vector<LabeledPair> make_random_fake_eval_set(const Model& m, const std::vector<Example>& corpus, Rng& rng);

// Adam step on the discriminator only; returns the batch loss.
double discriminator_step(Model& m, const std::vector<LabeledPair>& batch, AdamState& opt);

// Fraction classified correctly at the P_sim = 0.5 threshold.
double discriminator_accuracy(const Model& m, const std::vector<LabeledPair>& pairs);

struct PretrainResult {
  double mean_loss = 0.0;  // over the final 10% of steps
  double heldout_accuracy = 0.0;
};

// Generator frozen; `heldout` supplies the real-vs-uniform-fake check.
PretrainResult pretrain_discriminator(Model& m, const std::vector<Example>& train, const std::vector<Example>& heldout,
                                      AdamState& opt, std::size_t steps, std::size_t batch_size, FakeSource source,
                                      Rng& rng);

// ---------------------------------------------------------------------------
// Policy gradient

using RewardFn = std::function<double(const std::vector<std::string>& nl, const AstNode& ast)>;

// P_sim of the model's discriminator.
RewardFn discriminator_reward(const Model& m);

// -mean_i (R_i - b) * sum_t log p(a_t); incomplete samples must carry R = 0.
template <class T>
BasicValue<T> pg_surrogate(const std::vector<SampleResult<T>>& samples, const std::vector<double>& rewards,
                           double baseline);

struct PgStepResult {
  double mean_reward = 0.0;
  std::size_t complete = 0;
  bool updated = false;
};

// One sample per utterance, terminal reward broadcast to every step, moving
// average baseline. Skips the optimizer when every advantage is zero.
PgStepResult policy_gradient_step(Model& m, const std::vector<const Example*>& batch, AdamState& opt,
                                  TrainState& state, Rng& rng, const RewardFn& reward);

// ---------------------------------------------------------------------------
// Evaluation and regimes

struct EvalResult {
  double accuracy = 0.0;
  std::vector<bool> correct;
  std::vector<std::string> predictions;  // empty when no hypothesis completed
};

EvalResult evaluate_exact_match(const Model& m, const std::vector<Example>& split, std::size_t beam_width,
                                std::size_t max_steps);

enum class TrainStatus { Ok, Collapse };

using MetricsSink = std::function<void(const MetricsRow&)>;

struct TrainResult {
  TrainStatus status = TrainStatus::Ok;
  TrainState state;
  double best_dev = -1.0;
  std::optional<double> dis_pretrain_accuracy;
};

// Alternates g_steps policy-gradient updates and d_steps discriminator
// updates per batch for config.adv_epochs epochs. Tracks the best dev
// exact-match into best_gen/best_dis.
TrainStatus adversarial_loop(Model& m, const std::vector<Example>& train, const std::vector<Example>& dev,
                             Optimizers& opt, TrainState& state, Rng& rng, const MetricsSink& sink, double& best_dev,
                             ParameterStore& best_gen, ParameterStore& best_dis);

// Runs the regime in m.config and leaves the best-dev parameters in `m`.
TrainResult train_regime(Model& m, const std::vector<Example>& train, const std::vector<Example>& dev, Rng& rng,
                         const MetricsSink& sink);

}  // namespace astgan
