#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bbeval/core.hpp"
#include "bbeval/dist.hpp"

namespace bbeval {

// ---------------------------------------------------------------------------
// Estimates
// ---------------------------------------------------------------------------

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;   // 0 for exact results
  uint64_t trials = 0;    // 0 for exact results
  bool exact = false;

  double ci95_lo() const { return value - 1.96 * stderr_; }
  double ci95_hi() const { return value + 1.96 * stderr_; }
};

// "estimator,value,stderr,trials,master_seed" (no trailing newline).
std::string estimate_csv_row(const std::string& estimator, const Estimate& e,
                             uint64_t master_seed);

// ---------------------------------------------------------------------------
// Exact enumeration over finite supports
// ---------------------------------------------------------------------------

// Exact oracles walk every k-tuple of support points (weight = product of
// atom masses). The walk refuses to start when support^k exceeds the budget.
inline constexpr uint64_t kEnumBudget = 1'000'000;

// support^k, or budget+1 if it overflows past the budget.
uint64_t tuple_count(size_t support, size_t k, uint64_t budget = kEnumBudget);
bool enumerable(const FiniteDistribution& dist, size_t k,
                uint64_t budget = kEnumBudget);

// visit(points, weight); throws BudgetError when support^k > budget.
void for_each_tuple(const FiniteDistribution& dist, size_t k,
                    const std::function<void(std::span<const DataPoint>, double)>& visit,
                    uint64_t budget = kEnumBudget);

// Finite seed set for averaging fit randomness in exact oracles. Deterministic
// algorithms ignore seeds, so `single()` suffices for them; randomized ones
// get a caller-chosen grid (default recommendation: equispaced(64), the
// midpoints (i + 1/2) / m).
struct SeedGrid {
  std::vector<Seed> seeds;

  static SeedGrid single() { return SeedGrid{{Seed::from_value(0.5)}}; }
  static SeedGrid equispaced(int m);
};

// ---------------------------------------------------------------------------
// Risk
// ---------------------------------------------------------------------------

// E[loss(model(X), Y)] summed over atoms. Exact.
Estimate model_risk_exact(const FittedModel& model,
                          const FiniteDistribution& dist, const LossFn& loss);

// Average risk of the algorithm at training size n: each trial draws n+1
// fresh points and a fresh seed, fits on the first n, scores on the last.
Estimate algorithm_risk_mc(const AlgorithmHandle& alg,
                           const FiniteDistribution& dist, size_t n,
                           const LossFn& loss, uint64_t trials, RngStream rng,
                           int workers = 0);

// Same expectation, exactly: enumerate all (n+1)-tuples, average fit
// randomness over the seed grid.
Estimate algorithm_risk_exact(const AlgorithmHandle& alg,
                              const FiniteDistribution& dist, size_t n,
                              const LossFn& loss,
                              const SeedGrid& grid = SeedGrid::single(),
                              uint64_t budget = kEnumBudget);

// K-fold cross-validation on a fixed dataset: contiguous folds, a fresh fit
// seed per fold, average held-out loss. K must divide the data size evenly.
// Optional pre-shuffle (drawn from rng) permutes the data first.
Estimate cv_estimate(const AlgorithmHandle& alg, const Dataset& data, size_t K,
                     const LossFn& loss, RngStream rng, bool shuffle = false);

// Mean holdout loss of a fixed model, with its standard error.
Estimate holdout_estimate(const FittedModel& model, const Dataset& holdout,
                          const LossFn& loss);

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

// Leave-one-out instability at training size n, order q:
//   beta_q = max_j E[ |loss(fit(D), Z) - loss(fit(D minus j), Z)|^q ]^(1/q)
// with the SAME seed on both fits and a fresh test point Z. `per_unit[j-1]`
// keeps each left-out position's estimate; `overall` is the max.
struct StabilityEstimate {
  Estimate overall;
  std::vector<Estimate> per_unit;
  size_t argmax = 0;  // 1-based left-out index attaining the max
};

// Monte Carlo (stderr via the delta method on the q-th moment). all_units
// false estimates only j = n (cheap screen; valid for exchangeable draws).
StabilityEstimate stability_mc(const AlgorithmHandle& alg,
                               const FiniteDistribution& dist, size_t n,
                               double q, const LossFn& loss, uint64_t trials,
                               RngStream rng, int workers = 0,
                               bool all_units = true);

StabilityEstimate stability_exact(const AlgorithmHandle& alg,
                                  const FiniteDistribution& dist, size_t n,
                                  double q, const LossFn& loss,
                                  const SeedGrid& grid = SeedGrid::single(),
                                  uint64_t budget = kEnumBudget);

// Pair variant: the compared quantity is psi(fit0(X), fit1(X), Y), both
// algorithms fit on the same data with the same seed.
StabilityEstimate pair_stability_mc(const AlgorithmHandle& alg0,
                                    const AlgorithmHandle& alg1,
                                    const ComparisonFn& psi,
                                    const FiniteDistribution& dist, size_t n,
                                    double q, uint64_t trials, RngStream rng,
                                    int workers = 0, bool all_units = true);

StabilityEstimate pair_stability_exact(const AlgorithmHandle& alg0,
                                       const AlgorithmHandle& alg1,
                                       const ComparisonFn& psi,
                                       const FiniteDistribution& dist, size_t n,
                                       double q,
                                       const SeedGrid& grid = SeedGrid::single(),
                                       uint64_t budget = kEnumBudget);

// ---------------------------------------------------------------------------
// Comparison advantage
// ---------------------------------------------------------------------------

// E[psi(fit0(X), fit1(X), Y)] at training size n, shared data and seed per
// trial. Positive: algorithm 1 ahead.
Estimate delta_mc(const AlgorithmHandle& alg0, const AlgorithmHandle& alg1,
                  const ComparisonFn& psi, const FiniteDistribution& dist,
                  size_t n, uint64_t trials, RngStream rng, int workers = 0);

Estimate delta_exact(const AlgorithmHandle& alg0, const AlgorithmHandle& alg1,
                     const ComparisonFn& psi, const FiniteDistribution& dist,
                     size_t n, const SeedGrid& grid = SeedGrid::single(),
                     uint64_t budget = kEnumBudget);

// ---------------------------------------------------------------------------
// Consistency gap
// ---------------------------------------------------------------------------

// How far the deployed model's risk strays from the algorithm's average:
//   mean_gap = E_D |R(fit(D)) - Rbar|,  rms_gap = E_D[(R(fit(D)) - Rbar)^2]^(1/2).
// Exact enumeration over training sets; refuses randomized algorithms (the
// definition needs a deterministic fit), detected by a two-seed probe.
struct ConsistencyGap {
  double mean_gap = 0.0;
  double rms_gap = 0.0;
  double average_risk = 0.0;  // Rbar
};

ConsistencyGap consistency_gap(const AlgorithmHandle& alg,
                               const FiniteDistribution& dist, size_t n,
                               const LossFn& loss,
                               uint64_t budget = kEnumBudget);

}  // namespace bbeval
