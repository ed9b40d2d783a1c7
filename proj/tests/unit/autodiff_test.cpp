#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "astgan/autodiff.hpp"
#include "astgan/params.hpp"
#include "astgan/rng.hpp"
#include "gradient_suite.hpp"
#include "test_support.hpp"

using namespace astgan;
using astgan::testing::random_leaf;

namespace {

Value leaf(Shape s, std::vector<float> d) { return Value::leaf(std::move(s), std::move(d), true); }

}  // namespace

TEST(Autodiff, SoftmaxOfZerosIsUniform) {
  auto y = softmax(Value::zeros({4}));
  for (float v : y.data()) EXPECT_FLOAT_EQ(v, 0.25f);
}

TEST(Autodiff, MatmulByIdentity) {
  auto a = Value::constant({2, 2}, {1, 2, 3, 4});
  auto eye = Value::constant({2, 2}, {1, 0, 0, 1});
  auto y = matmul(a, eye);
  EXPECT_EQ(y.shape(), (Shape{2, 2}));
  EXPECT_EQ(std::vector<float>(y.data().begin(), y.data().end()), (std::vector<float>{1, 2, 3, 4}));
}

TEST(Autodiff, SigmoidHalf) {
  const long double ref = 1.0L / (1.0L + std::exp(-0.5L));
  EXPECT_NEAR(sigmoid(Value::scalar(0.5f)).item(), static_cast<double>(ref), 1e-7);
}

TEST(Autodiff, GradientOfSquare) {
  auto x = leaf({}, {3.0f});
  backward(mul(x, x));
  EXPECT_FLOAT_EQ(x.grad()[0], 6.0f);
}

TEST(Autodiff, GradientOfSumIsOnes) {
  auto x = leaf({3}, {1, -2, 5});
  backward(sum(x));
  for (float g : x.grad()) EXPECT_FLOAT_EQ(g, 1.0f);
}

TEST(Autodiff, SharedSubexpressionAccumulates) {
  // y = x*x + x uses x along three paths.
  auto x = leaf({}, {2.0f});
  backward(add(mul(x, x), x));
  EXPECT_FLOAT_EQ(x.grad()[0], 5.0f);
}

TEST(Autodiff, LeafGradientsAccumulateAcrossCalls) {
  auto x = leaf({}, {1.5f});
  backward(scale(x, 2.0f));
  backward(scale(x, 2.0f));
  EXPECT_FLOAT_EQ(x.grad()[0], 4.0f);
  x.zero_grad();
  EXPECT_FLOAT_EQ(x.grad()[0], 0.0f);
}

TEST(Autodiff, NoGradGuardSkipsRecording) {
  auto x = leaf({}, {1.0f});
  Value y;
  {
    NoGradGuard g;
    y = mul(x, x);
  }
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(grad_enabled());
}

TEST(Autodiff, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Value::zeros({2, 3}), Value::zeros({2, 3})), ShapeError);
  EXPECT_THROW(add(Value::zeros({2}), Value::zeros({3})), ShapeError);
  EXPECT_THROW(concat(std::vector<Value>{Value::zeros({2, 2}), Value::zeros({2, 3})}, 0), ShapeError);
  EXPECT_THROW(slice(Value::zeros({3}), 2, 4), ShapeError);
  EXPECT_THROW(embedding_lookup(Value::zeros({3, 2}), std::size_t{3}), ShapeError);
  EXPECT_THROW(Value::leaf({2, 2}, {1, 2, 3}, true), ShapeError);
}

TEST(Autodiff, BackwardNeedsScalarRoot) { EXPECT_THROW(backward(leaf({2}, {1, 2})), ShapeError); }

TEST(Autodiff, LogOfNonPositiveIsDomainError) {
  EXPECT_THROW(log(Value::constant({2}, {1.0f, 0.0f})), DomainError);
  EXPECT_THROW(log(Value::scalar(-1.0f)), DomainError);
}

TEST(Autodiff, PrimitivesMatchFiniteDifferences) {
  for (const auto& r : astgan::testing::primitive_gradient_sweeps(100, 1000)) {
    EXPECT_LT(r.worst, 1e-4) << r.name;
  }
}

TEST(Autodiff, GradientCheckDetectsAWrongGradient) {
  // Sanity check on the oracle itself: a function whose recorded graph
  // disagrees with its value must be flagged.
  Rng rng(3);
  auto x = random_leaf({4}, rng);
  auto f = [x] {
    auto y = sum(mul(x, x));
    return add(y, Value64::scalar(std::pow(x[0], 3)));  // value-only term, no gradient
  };
  EXPECT_GT(astgan::testing::check_gradients(f, {x}, rng, 1e-3, 24).rel_error, 1e-3);
}

// ---------------------------------------------------------------------------
// Initialization

TEST(Xavier, BoundMatchesFormula) {
  EXPECT_DOUBLE_EQ(xavier_bound(3, 3), 1.0);
  EXPECT_NEAR(xavier_bound(100, 200), std::sqrt(0.02), 1e-15);
  EXPECT_THROW(xavier_bound(0, 3), std::invalid_argument);
}

TEST(Xavier, SamplesWithinBoundAndSpreadOut) {
  Rng rng(5);
  auto w = xavier_uniform_init<double>({50, 40}, 40, 50, rng);
  const double a = xavier_bound(40, 50);
  double lo = a, hi = -a;
  for (double v : w.data()) {
    EXPECT_LE(std::abs(v), a);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_LT(lo, -0.9 * a);
  EXPECT_GT(hi, 0.9 * a);
  EXPECT_TRUE(w.requires_grad());
}

TEST(Xavier, DeterministicForSeed) {
  Rng a(9), b(9);
  auto x = xavier_uniform_init({8}, 4, 4, a);
  auto y = xavier_uniform_init({8}, 4, 4, b);
  EXPECT_TRUE(std::equal(x.data().begin(), x.data().end(), y.data().begin()));
}

// ---------------------------------------------------------------------------
// Adam

namespace {

// Scalar reference recurrence for one coordinate.
struct ScalarAdam {
  double m = 0, v = 0, lr, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  int t = 0;
  double step(double w, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return w - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParameterStore store;
  store.add("w", Value::constant({3}, {1, 2, 3}));
  auto opt = AdamState::for_store(store);
  adam_step(store, opt);
  auto d = store.get("w").data();
  EXPECT_EQ(std::vector<float>(d.begin(), d.end()), (std::vector<float>{1, 2, 3}));
}

TEST(Adam, StepReducesQuadratic) {
  ParameterStore store;
  store.add("w", Value::constant({}, {1.0f}));
  auto opt = AdamState::for_store(store, {.lr = 0.1});
  auto& w = store.get("w");
  const float before = w.item() * w.item();
  backward(mul(w, w));
  adam_step(store, opt);
  EXPECT_LT(w.item() * w.item(), before);
  EXPECT_FLOAT_EQ(w.grad()[0], 0.0f);
}

TEST(Adam, ConvergesOnShiftedQuadraticLikeScalarReference) {
  ParameterStore store;
  store.add("w", Value::constant({}, {0.0f}));
  auto opt = AdamState::for_store(store, {.lr = 0.05});
  ScalarAdam ref{.lr = 0.05};
  double w_ref = 0.0;
  auto& w = store.get("w");
  for (int i = 0; i < 200; ++i) {
    auto d = sub(w, Value::scalar(2.0f));
    backward(mul(d, d));
    w_ref = ref.step(w_ref, 2 * (w_ref - 2.0));
    adam_step(store, opt);
    ASSERT_NEAR(w.item(), w_ref, 1e-4) << "step " << i;
  }
  EXPECT_NEAR(w.item(), 2.0, 0.05);
}

TEST(Adam, MissingStateIsAnError) {
  ParameterStore store;
  store.add("w", Value::zeros({2}));
  AdamState opt;
  EXPECT_THROW(adam_step(store, opt), std::logic_error);
}

TEST(ParameterStore, DuplicateNameRejectedAndCastPreservesValues) {
  ParameterStore store;
  store.add("a", Value::constant({2}, {0.25f, -1.5f}));
  EXPECT_THROW(store.add("a", Value::zeros({1})), std::invalid_argument);
  auto d = store.cast<double>();
  EXPECT_EQ(d.get("a")[1], -1.5);
  EXPECT_TRUE(d.get("a").requires_grad());
  EXPECT_EQ(store.num_scalars(), 2u);
}

TEST(Rng, CategoricalRespectsZeroWeights) {
  Rng rng(1);
  std::vector<double> w{0.0, 1.0, 0.0, 3.0};
  std::set<std::size_t> seen;
  for (int i = 0; i < 200; ++i) seen.insert(rng.categorical(w));
  EXPECT_EQ(seen, (std::set<std::size_t>{1, 3}));
  EXPECT_THROW(rng.categorical(std::vector<double>{0.0, 0.0}), std::invalid_argument);
}

TEST(Autodiff, SingleElementOperandsKeepTheHigherRank) {
  auto s = Value64::scalar(2.0);
  auto v = Value64::vector({3.0});
  EXPECT_EQ(mul(s, v).shape(), (Shape{1}));
  EXPECT_EQ(add(v, s).shape(), (Shape{1}));
  EXPECT_EQ(mul(s, s).shape(), Shape{});
}
