#pragma once

#include "bbeval/binomial.hpp"
#include "bbeval/core.hpp"
#include "bbeval/harness.hpp"

namespace bbeval {

// Valid level-alpha protocols built on the exact randomized binomial rule.
// All of them split the input into m = floor(N / (n+1)) consecutive batches
// of n+1 points: the first n train, the last is scored. Leftover points
// (N mod (n+1)) are ignored.

// Evaluation test for "risk < tau". Needs a {0,1}-valued loss; the batch
// scores S ~ Binomial(m, R) exactly, and the randomized critical pair
// (k_star, a_star) at (m, tau, alpha) makes the size exactly alpha at R = tau.
struct BinomTestConfig {
  size_t n = 1;        // training size per batch
  double tau = 0.5;    // risk threshold
  double alpha = 0.05; // level
  LossFn loss = LossFn::zero_one();
};

TestProtocol binom_test_protocol(const BinomTestConfig& cfg);

// Comparison test for "algorithm 1 beats algorithm 0". Each batch fits both
// algorithms (the harness shares data and seed) and records
// sign(psi(yhat0, yhat1, y)) on the held-out point. Conditionally on the
// number of nonzero signs m_nz, the count of NEGATIVE signs is tested against
// Binomial(m_nz, 1/2) with the exact randomized lower-tail rule at level
// alpha; all-zero outcomes accept. Run it with run_compare_test.
TestProtocol compare_binom_protocol(size_t n, double alpha,
                                    const ComparisonFn& psi);

// Cross-validation threshold rule: K contiguous folds, one fit per fold with
// a fresh seed, decide 1 iff the pooled held-out loss average is < tau.
// Ad-hoc (no size guarantee) - it exists as the natural foil for the exact
// test above. K must divide the input size.
TestProtocol cv_threshold_protocol(size_t K, double tau, const LossFn& loss);

// Batch layout shared by the protocols above (exposed for tests/tools).
struct BatchLayout {
  size_t m = 0;          // number of complete batches
  size_t batch = 0;      // n + 1
  size_t used = 0;       // m * (n+1) points actually consumed
};

BatchLayout batch_layout(size_t N, size_t n);

}  // namespace bbeval
