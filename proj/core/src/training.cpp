#include "astgan/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

#include "astgan/code_syntax.hpp"

namespace astgan {

namespace {

std::string cell(const std::optional<double>& v, int decimals) {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
  return buf;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
  return idx;
}

std::vector<std::vector<const Example*>> make_batches(const std::vector<Example>& corpus, std::size_t batch_size,
                                                      Rng& rng) {
  const auto order = shuffled_indices(corpus.size(), rng);
  std::vector<std::vector<const Example*>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    std::vector<const Example*> b;
    for (std::size_t j = i; j < std::min(order.size(), i + batch_size); ++j) b.push_back(&corpus[order[j]]);
    batches.push_back(std::move(b));
  }
  return batches;
}

void copy_params(const ParameterStore& from, ParameterStore& to) {
  for (std::size_t i = 0; i < from.entries().size(); ++i) {
    const auto src = from.entries()[i].second.data();
    auto dst = to.entries()[i].second.mutable_data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace

std::string format_metrics(const MetricsRow& row) {
  return row.epoch + '\t' + cell(row.mle_nll, 6) + '\t' + cell(row.d_loss, 6) + '\t' + cell(row.mean_reward, 6) +
         '\t' + cell(row.dev_exact_match, 4);
}

Optimizers Optimizers::for_model(const Model& m) {
  AdamOptions g;
  g.lr = m.config.lr;
  AdamOptions d;
  d.lr = m.config.dis_lr;
  return {AdamState::for_store(m.gen, g), AdamState::for_store(m.dis, d)};
}

// ---------------------------------------------------------------------------
// Generator likelihood

template <class T>
BasicValue<T> mle_loss(const BasicGenerator<T>& gen, const std::vector<const Example*>& batch) {
  if (batch.empty()) throw std::invalid_argument("mle_loss: empty batch");
  std::vector<BasicValue<T>> terms;
  terms.reserve(batch.size());
  for (const Example* ex : batch) {
    try {
      terms.push_back(gen.sequence_log_prob(ex->nl, ast_to_actions(ex->ast, gen.grammar())));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("record '" + ex->id + "': " + e.what());
    }
  }
  return neg(mean(concat(terms)));
}

template BasicValue<float> mle_loss(const BasicGenerator<float>&, const std::vector<const Example*>&);
template BasicValue<double> mle_loss(const BasicGenerator<double>&, const std::vector<const Example*>&);

double mle_epoch(Model& m, const std::vector<Example>& corpus, AdamState& opt, std::size_t batch_size, Rng& rng) {
  if (corpus.empty()) throw std::invalid_argument("mle_epoch: empty corpus");
  const auto gen = m.generator();
  double total = 0.0;
  for (const auto& batch : make_batches(corpus, batch_size, rng)) {
    auto loss = mle_loss(gen, batch);
    total += static_cast<double>(loss.item()) * static_cast<double>(batch.size());
    backward(loss);
    adam_step(m.gen, opt);
  }
  return total / static_cast<double>(corpus.size());
}

// ---------------------------------------------------------------------------
// Discriminator

std::optional<AstNode> random_policy_tree(const Model& m, const std::vector<std::string>& nl, Rng& rng,
                                          std::size_t max_steps, std::size_t tries) {
  for (std::size_t i = 0; i < tries; ++i) {
    auto d = random_derivation(m.grammar, m.actions, nl, rng, max_steps);
    if (d.complete) return actions_to_ast(d.actions, m.grammar);
  }
  return std::nullopt;
}

namespace {

// Gold tree of a different example; nullopt when every other tree is equal.
std::optional<AstNode> mismatched_tree(const std::vector<Example>& corpus, std::size_t i, Rng& rng) {
  if (corpus.size() < 2) return std::nullopt;
  for (std::size_t attempt = 0; attempt < 20; ++attempt) {
    std::size_t j = rng.uniform_int(corpus.size() - 1);
    if (j >= i) ++j;
    if (!(corpus[j].ast == corpus[i].ast)) return corpus[j].ast;
  }
  return std::nullopt;
}

LabeledPair fallback_fake(const Model& m, const std::vector<Example>& corpus, std::size_t i, Rng& rng) {
  if (auto t = random_policy_tree(m, corpus[i].nl, rng, m.config.max_steps)) return {corpus[i].nl, *t, false};
  if (auto t = mismatched_tree(corpus, i, rng)) return {corpus[i].nl, *t, false};
  throw std::runtime_error("cannot construct a negative example for record '" + corpus[i].id + "'");
}

}  // namespace

std::vector<LabeledPair> make_discriminator_batch(const Model& m, const std::vector<Example>& corpus,
                                                  std::size_t batch_size, FakeSource source, Rng& rng) {
  if (corpus.empty()) throw std::invalid_argument("discriminator batch: empty corpus");
  const std::size_t n_real = (batch_size + 1) / 2;
  const std::size_t n_fake = batch_size - n_real;
  const std::size_t n_sampled = source == FakeSource::Mixed ? (n_fake + 1) / 2 : 0;
  const std::size_t n_mismatched = source == FakeSource::Mixed ? n_fake - n_sampled : 0;

  std::vector<LabeledPair> batch;
  batch.reserve(batch_size);
  for (std::size_t k = 0; k < n_real; ++k) {
    const auto& ex = corpus[rng.uniform_int(corpus.size())];
    batch.push_back({ex.nl, ex.ast, true});
  }
  NoGradGuard no_grad;
  const auto gen = m.generator();
  for (std::size_t k = 0; k < n_sampled; ++k) {
    const std::size_t i = rng.uniform_int(corpus.size());
    auto s = gen.sample(corpus[i].nl, rng, m.config.max_steps);
    if (s.complete) {
      AstNode t = actions_to_ast(s.actions, m.grammar);
      if (!(t == corpus[i].ast)) {
        batch.push_back({corpus[i].nl, std::move(t), false});
        continue;
      }
    }
    batch.push_back(fallback_fake(m, corpus, i, rng));
  }
  for (std::size_t k = 0; k < n_mismatched; ++k) {
    const std::size_t i = rng.uniform_int(corpus.size());
    if (auto t = mismatched_tree(corpus, i, rng)) {
      batch.push_back({corpus[i].nl, std::move(*t), false});
    } else {
      batch.push_back(fallback_fake(m, corpus, i, rng));
    }
  }
  const std::size_t n_random = batch_size - batch.size();
  for (std::size_t k = 0; k < n_random; ++k) {
    const std::size_t i = rng.uniform_int(corpus.size());
    batch.push_back(fallback_fake(m, corpus, i, rng));
  }
  return batch;
}

std::vector<LabeledPair> make_random_fake_eval_set(const Model& m, const std::vector<Example>& corpus, Rng& rng) {
  std::vector<LabeledPair> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out.push_back({corpus[i].nl, corpus[i].ast, true});
    if (auto t = random_policy_tree(m, corpus[i].nl, rng, m.config.max_steps)) {
      out.push_back({corpus[i].nl, std::move(*t), false});
    }
  }
  return out;
}

double discriminator_step(Model& m, const std::vector<LabeledPair>& batch, AdamState& opt) {
  auto loss = m.discriminator().loss(batch);
  backward(loss);
  adam_step(m.dis, opt);
  return static_cast<double>(loss.item());
}

double discriminator_accuracy(const Model& m, const std::vector<LabeledPair>& pairs) {
  if (pairs.empty()) return 0.0;
  NoGradGuard no_grad;
  const auto dis = m.discriminator();
  std::size_t right = 0;
  for (const auto& p : pairs) {
    const double s = dis.score(p.nl, p.ast).p_sim();
    // Exactly 0.5 counts as "real", so an untrained symmetric head scores 0.5
    // on balanced data.
    if ((s >= 0.5) == p.real) ++right;
  }
  return static_cast<double>(right) / static_cast<double>(pairs.size());
}

PretrainResult pretrain_discriminator(Model& m, const std::vector<Example>& train, const std::vector<Example>& heldout,
                                      AdamState& opt, std::size_t steps, std::size_t batch_size, FakeSource source,
                                      Rng& rng) {
  PretrainResult r;
  const std::size_t tail = std::max<std::size_t>(1, steps / 10);
  double tail_sum = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    const auto batch = make_discriminator_batch(m, train, batch_size, source, rng);
    const double loss = discriminator_step(m, batch, opt);
    if (s + tail >= steps) tail_sum += loss;
  }
  r.mean_loss = steps ? tail_sum / static_cast<double>(std::min(tail, steps)) : 0.0;
  r.heldout_accuracy = discriminator_accuracy(m, make_random_fake_eval_set(m, heldout, rng));
  return r;
}

// ---------------------------------------------------------------------------
// Policy gradient

RewardFn discriminator_reward(const Model& m) {
  return [&m](const std::vector<std::string>& nl, const AstNode& ast) {
    NoGradGuard no_grad;
    return m.discriminator().score(nl, ast).p_sim();
  };
}

template <class T>
BasicValue<T> pg_surrogate(const std::vector<SampleResult<T>>& samples, const std::vector<double>& rewards,
                           double baseline) {
  if (samples.empty() || samples.size() != rewards.size()) {
    throw std::invalid_argument("pg_surrogate: need one reward per sample");
  }
  std::vector<BasicValue<T>> terms;
  terms.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    terms.push_back(scale(samples[i].log_prob, static_cast<T>(rewards[i] - baseline)));
  }
  return neg(mean(concat(terms)));
}

template BasicValue<float> pg_surrogate(const std::vector<SampleResult<float>>&, const std::vector<double>&, double);
template BasicValue<double> pg_surrogate(const std::vector<SampleResult<double>>&, const std::vector<double>&,
                                         double);

PgStepResult policy_gradient_step(Model& m, const std::vector<const Example*>& batch, AdamState& opt,
                                  TrainState& state, Rng& rng, const RewardFn& reward) {
  if (batch.empty()) throw std::invalid_argument("policy_gradient_step: empty batch");
  const auto gen = m.generator();
  std::vector<SampleResult<float>> samples;
  std::vector<double> rewards;
  PgStepResult r;
  for (const Example* ex : batch) {
    auto s = gen.sample(ex->nl, rng, m.config.max_steps);
    double R = 0.0;
    if (s.complete) {
      R = reward(ex->nl, actions_to_ast(s.actions, m.grammar));
      ++r.complete;
    }
    rewards.push_back(R);
    samples.push_back(std::move(s));
  }
  r.mean_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
  if (r.complete == 0) std::cerr << "warning: no sample in the batch completed within max_steps\n";

  const double b = state.baseline.value_or(r.mean_reward);
  const bool any_signal = std::any_of(rewards.begin(), rewards.end(), [&](double R) { return R != b; });
  if (any_signal) {
    auto loss = pg_surrogate(samples, rewards, b);
    backward(loss);
    adam_step(m.gen, opt);
    r.updated = true;
  } else {
    m.gen.zero_grad();
  }
  const double decay = m.config.baseline_decay;
  state.baseline = decay * b + (1.0 - decay) * r.mean_reward;
  ++state.step;
  return r;
}

// ---------------------------------------------------------------------------
// Evaluation and regimes

EvalResult evaluate_exact_match(const Model& m, const std::vector<Example>& split, std::size_t beam_width,
                                std::size_t max_steps) {
  EvalResult r;
  if (split.empty()) return r;
  const auto gen = m.generator();
  std::size_t right = 0;
  for (const auto& ex : split) {
    std::string pred;
    if (ex.nl.size() <= m.config.max_input_len) {
      auto beam = gen.beam_search(ex.nl, beam_width, max_steps);
      if (!beam.empty()) pred = render_code(actions_to_ast(beam.front().actions, m.grammar), m.grammar);
    }
    const bool ok = !pred.empty() && pred == ex.code;
    right += ok ? 1 : 0;
    r.correct.push_back(ok);
    r.predictions.push_back(std::move(pred));
  }
  r.accuracy = static_cast<double>(right) / static_cast<double>(split.size());
  return r;
}

TrainStatus adversarial_loop(Model& m, const std::vector<Example>& train, const std::vector<Example>& dev,
                             Optimizers& opt, TrainState& state, Rng& rng, const MetricsSink& sink, double& best_dev,
                             ParameterStore& best_gen, ParameterStore& best_dis) {
  const auto& c = m.config;
  const RewardFn reward = discriminator_reward(m);
  std::size_t low_epochs = 0;
  for (std::size_t epoch = 1; epoch <= c.adv_epochs; ++epoch) {
    double reward_sum = 0.0, d_sum = 0.0;
    std::size_t pg_steps = 0, d_steps = 0;
    for (const auto& batch : make_batches(train, c.batch_size, rng)) {
      for (std::size_t g = 0; g < c.g_steps; ++g) {
        reward_sum += policy_gradient_step(m, batch, opt.gen, state, rng, reward).mean_reward;
        ++pg_steps;
      }
      for (std::size_t d = 0; d < c.d_steps; ++d) {
        const auto pairs = make_discriminator_batch(m, train, c.batch_size, c.dis_fakes, rng);
        d_sum += discriminator_step(m, pairs, opt.dis);
        ++d_steps;
      }
    }
    ++state.epoch;
    MetricsRow row{"adv:" + std::to_string(epoch), std::nullopt, d_sum / static_cast<double>(d_steps),
                   reward_sum / static_cast<double>(pg_steps), std::nullopt};
    const double dev_em = evaluate_exact_match(m, dev, c.beam_width, c.max_steps).accuracy;
    row.dev_exact_match = dev_em;
    if (dev_em > best_dev) {
      best_dev = dev_em;
      copy_params(m.gen, best_gen);
      copy_params(m.dis, best_dis);
    }
    state.history.push_back(row);
    if (sink) sink(row);
    low_epochs = *row.mean_reward < c.collapse_reward ? low_epochs + 1 : 0;
    if (low_epochs >= c.collapse_epochs) return TrainStatus::Collapse;
  }
  return TrainStatus::Ok;
}

TrainResult train_regime(Model& m, const std::vector<Example>& train, const std::vector<Example>& dev, Rng& rng,
                         const MetricsSink& sink) {
  const auto& c = m.config;
  c.validate();
  if (train.empty()) throw std::invalid_argument("training corpus is empty");
  if (dev.empty()) throw std::invalid_argument("dev corpus is empty");
  TrainResult result;
  auto& state = result.state;
  Optimizers opt = Optimizers::for_model(m);
  ParameterStore best_gen = m.gen.clone();
  ParameterStore best_dis = m.dis.clone();
  auto emit = [&](const MetricsRow& row) {
    state.history.push_back(row);
    if (sink) sink(row);
  };

  if (c.generator_pretraining()) {
    for (std::size_t epoch = 1; epoch <= c.mle_epochs; ++epoch) {
      MetricsRow row{"mle:" + std::to_string(epoch), mle_epoch(m, train, opt.gen, c.batch_size, rng), std::nullopt,
                     std::nullopt, std::nullopt};
      ++state.epoch;
      const double dev_em = evaluate_exact_match(m, dev, c.beam_width, c.max_steps).accuracy;
      row.dev_exact_match = dev_em;
      if (dev_em > result.best_dev) {
        result.best_dev = dev_em;
        copy_params(m.gen, best_gen);
        copy_params(m.dis, best_dis);
      }
      emit(row);
    }
  }
  if (c.regime != Regime::Mle) {
    if (c.discriminator_pretraining()) {
      auto pre = pretrain_discriminator(m, train, dev, opt.dis, c.dis_pretrain_steps, c.batch_size, c.dis_fakes, rng);
      result.dis_pretrain_accuracy = pre.heldout_accuracy;
      emit(MetricsRow{"dpre:1", std::nullopt, pre.mean_loss, std::nullopt, std::nullopt});
    }
    if (result.best_dev < 0.0) {
      // No generator pretraining: the untrained generator is the baseline.
      result.best_dev = evaluate_exact_match(m, dev, c.beam_width, c.max_steps).accuracy;
      copy_params(m.gen, best_gen);
    }
    // The discriminator snapshot always follows its own pretraining.
    copy_params(m.dis, best_dis);
    result.status = adversarial_loop(m, train, dev, opt, state, rng, sink, result.best_dev, best_gen, best_dis);
  }
  copy_params(best_gen, m.gen);
  copy_params(best_dis, m.dis);
  return result;
}

}  // namespace astgan
