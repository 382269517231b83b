#include <cmath>
#include <limits>
#include <memory>

#include "bbeval/core.hpp"
#include "bbeval/errors.hpp"
#include "doctest.h"

using namespace bbeval;

TEST_CASE("seeds round-trip through bits and values") {
  Seed s = Seed::from_bits(0xDEADBEEFULL);
  CHECK(s.bits == 0xDEADBEEFULL);
  CHECK(Seed::from_value(0.0).bits == 0);
  CHECK(Seed::from_value(0.5).value() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(Seed::from_value(1.0).bits == UINT64_MAX);
  // Nearby values stay monotone.
  CHECK(Seed::from_value(0.25).bits < Seed::from_value(0.75).bits);
}

TEST_CASE("zero-one loss compares the prediction to the exact label") {
  LossFn l = LossFn::zero_one();
  CHECK(l(1.0, 1) == 0.0);
  CHECK(l(0.0, 1) == 1.0);
  CHECK(l(0.9999, 1) == 1.0);  // no rounding: a miss is a miss
  CHECK(l.bound() == 1.0);
  CHECK(l.binary());
  CHECK(l.bounded());
}

TEST_CASE("thresholded loss forgives errors up to the radius") {
  LossFn l = LossFn::thresholded(1.5);
  CHECK(l(2.0, 1) == 0.0);   // |2-1| = 1 <= 1.5
  CHECK(l(3.0, 1) == 1.0);   // |3-1| = 2 > 1.5
  CHECK(l(-0.5, 1) == 0.0);  // |-0.5-1| = 1.5, not strictly above
  CHECK(l.binary());
}

TEST_CASE("squared and absolute losses are unbounded") {
  CHECK(LossFn::squared()(3.0, 1) == 4.0);
  CHECK(LossFn::absolute()(3.0, 1) == 2.0);
  CHECK_FALSE(LossFn::squared().bounded());
  CHECK_FALSE(LossFn::absolute().binary());
  CHECK(LossFn::squared().bound() == std::numeric_limits<double>::infinity());
}

TEST_CASE("custom losses are range-checked on every call") {
  LossFn bad = LossFn::custom("bad", 1.0, [](double yhat, int64_t) {
    return yhat;  // negative inputs produce a negative "loss"
  });
  CHECK(bad(0.5, 0) == 0.5);
  CHECK_THROWS_AS(bad(-0.25, 0), ContractError);
  CHECK_THROWS_AS(bad(2.0, 0), ContractError);  // above the declared bound
}

TEST_CASE("loss difference needs a bounded loss and inherits its bound") {
  ComparisonFn d = ComparisonFn::loss_difference(LossFn::zero_one());
  CHECK(d.bound() == 1.0);
  CHECK_THROWS_AS(ComparisonFn::loss_difference(LossFn::squared()), ConfigError);
}

TEST_CASE("loss difference sign convention: positive favors the second model") {
  ComparisonFn d = ComparisonFn::loss_difference(LossFn::zero_one());
  // yhat0 misses (loss 1), yhat1 hits (loss 0): psi = 1 - 0 = +1.
  CHECK(d(0.0, 1.0, 1) == 1.0);
  // yhat0 hits, yhat1 misses: psi = -1.
  CHECK(d(1.0, 0.0, 1) == -1.0);
  CHECK(d(1.0, 1.0, 1) == 0.0);
}

TEST_CASE("loss order indicator works for unbounded losses with bound 1") {
  ComparisonFn s = ComparisonFn::loss_order_indicator(LossFn::squared());
  // squared losses at y=2: (0 -> 4), (1 -> 1): first is worse, sign +1.
  CHECK(s(0.0, 1.0, 2) == 1.0);
  CHECK(s(1.0, 0.0, 2) == -1.0);
  CHECK(s(1.0, 1.0, 2) == 0.0);
  CHECK(s.bound() == 1.0);
}

TEST_CASE("constant predictor ignores data and seed") {
  AlgorithmHandle alg = constant_predictor(0.75);
  FittedModel m = alg.fit({{1, 2}, {3, 4}}, Seed::from_value(0.1));
  CHECK(m(0) == 0.75);
  CHECK(m(999) == 0.75);
  CHECK(alg.name == "constant(0.75)");
}

TEST_CASE("majority vote picks the modal label, ties to the smaller") {
  AlgorithmHandle alg = majority_vote();
  CHECK(alg.fit({{0, 1}, {1, 1}, {2, 0}}, Seed{})(5) == 1.0);
  CHECK(alg.fit({{0, 1}, {1, 2}}, Seed{})(5) == 1.0);  // 1-1 tie -> smaller
  CHECK(alg.fit({}, Seed{})(5) == 0.0);                // empty -> 0
}

TEST_CASE("1-nn predicts the nearest label with deterministic tie-breaks") {
  AlgorithmHandle alg = knn(1);
  FittedModel m = alg.fit({{0, 5}, {10, 7}}, Seed{});
  CHECK(m(3) == 5.0);
  CHECK(m(6) == 7.0);
  CHECK(m(5) == 5.0);  // equidistant: smaller feature value wins
}

TEST_CASE("k-nn votes among the k nearest") {
  AlgorithmHandle alg = knn(3);
  FittedModel m = alg.fit({{0, 1}, {1, 1}, {2, 0}}, Seed{});
  CHECK(m(0) == 1.0);  // labels {1,1,0} -> 1
  AlgorithmHandle two = knn(2);
  CHECK(two.fit({{0, 1}, {1, 0}}, Seed{})(0) == 0.0);  // 1-1 vote tie -> 0
}

TEST_CASE("k-nn contract: empty falls back, undersized data throws") {
  AlgorithmHandle alg = knn(2);
  CHECK(alg.fit({}, Seed{})(3) == 0.0);
  CHECK_THROWS_AS(alg.fit({{0, 1}}, Seed{}), ContractError);
  CHECK_THROWS_AS(knn(0), ConfigError);
}

TEST_CASE("empirical mean averages labels as reals") {
  AlgorithmHandle alg = empirical_mean();
  CHECK(alg.fit({{0, 1}, {0, 2}}, Seed{})(9) == doctest::Approx(1.5));
  CHECK(alg.fit({}, Seed{})(9) == 0.0);
}

TEST_CASE("seed coin is a pure function of the seed") {
  AlgorithmHandle alg = seed_coin(0.5);
  CHECK(alg.fit({{0, 7}}, Seed::from_value(0.25))(0) == 0.0);
  CHECK(alg.fit({}, Seed::from_value(0.75))(0) == 1.0);
  // Same seed, different data: same prediction.
  CHECK(alg.fit({{5, 5}}, Seed::from_value(0.75))(0) == 1.0);
}

TEST_CASE("builtin zoo instantiates and fits") {
  RngStream rng(3);
  for (const AlgorithmHandle& alg : builtin_algorithms()) {
    FittedModel m = alg.fit({{0, 0}, {1, 1}}, Seed::from_value(0.5));
    CHECK(std::isfinite(m(0)));
    CHECK_FALSE(alg.name.empty());
  }
}

TEST_CASE("determinism probe accepts seed-driven and rejects stateful fits") {
  RngStream rng(17);
  check_fit_deterministic(seed_coin(0.5), {{0, 1}}, Seed::from_value(0.3), 8,
                          rng);

  auto counter = std::make_shared<int>(0);
  AlgorithmHandle stateful{
      "stateful", [counter](const Dataset&, Seed) {
        double v = static_cast<double>((*counter)++);
        return FittedModel{[v](int64_t) { return v; }, "stateful"};
      }};
  CHECK_THROWS_AS(
      check_fit_deterministic(stateful, {{0, 1}}, Seed::from_value(0.3), 8, rng),
      ContractError);
}

TEST_CASE("antisymmetry probe accepts builtins and rejects a biased score") {
  RngStream rng(23);
  check_antisymmetry(ComparisonFn::loss_difference(LossFn::zero_one()), 64, rng);
  check_antisymmetry(ComparisonFn::loss_order_indicator(LossFn::squared()), 64,
                     rng);

  ComparisonFn biased = ComparisonFn::custom(
      "biased", 2.0, [](double, double, int64_t) { return 1.0; });
  CHECK_THROWS_AS(check_antisymmetry(biased, 64, rng), ContractError);
}

TEST_CASE("loss range probe rejects an out-of-range custom loss") {
  RngStream rng(29);
  check_loss_range(LossFn::zero_one(), 64, rng);
  LossFn sneaky = LossFn::custom("sneaky", 0.5, [](double yhat, int64_t y) {
    return std::abs(yhat - static_cast<double>(y));  // exceeds bound 0.5
  });
  CHECK_THROWS_AS(check_loss_range(sneaky, 64, rng), ContractError);
}
