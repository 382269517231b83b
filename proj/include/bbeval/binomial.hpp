#pragma once

#include <cstdint>

namespace bbeval {

// Exact-at-double-precision Binomial(m, p) tail arithmetic, done in log space
// so tiny tails (e.g. p^m for m ~ 60) keep full relative precision instead of
// underflowing through naive products.

// log P(S = k); -inf when the mass is 0 (p degenerate or k out of range).
double binomial_log_pmf(uint64_t m, double p, uint64_t k);

// P(S = k). k may be any integer; out-of-range k has mass 0.
double binomial_pmf(uint64_t m, double p, int64_t k);

// P(S <= k); sums pmf terms (never more than m+1 of them at desk scale).
double binomial_cdf(uint64_t m, double p, int64_t k);

// Randomized critical pair (k_star, a_star) for the level-alpha lower-tail
// test of S ~ Binomial(m, tau): reject outright when S < k_star and with
// probability a_star when S == k_star. The pair is the unique solution of
//   P(S < k_star) + a_star * P(S = k_star) = alpha,   a_star in [0, 1).
struct CriticalValue {
  uint64_t k_star = 0;
  double a_star = 0.0;
};

CriticalValue binomial_critical(uint64_t m, double tau, double alpha);

// Rejection probability of the (k_star, a_star) rule when S ~ Binomial(m, R):
// P(S < k_star) + a_star * P(S = k_star). At R = tau this is alpha by
// construction; it is decreasing in R.
double randomized_lower_power(uint64_t m, const CriticalValue& cv, double R);

// Exact power of the level-alpha rule at per-batch error rate R.
double binom_test_exact_power(uint64_t m, double tau, double alpha, double R);

// Closed-form power alpha * (1 + (tau - R)/(1 - tau))^m, capped at 1. Equals
// the exact power whenever alpha < (1 - tau)^m (then k_star = 0 and only the
// S = 0 randomization matters); meaningless otherwise.
double binom_test_closed_form_power(uint64_t m, double tau, double alpha, double R);
bool binom_closed_form_valid(uint64_t m, double tau, double alpha);

// Exact (Clopper-Pearson) two-sided confidence interval for a binomial
// proportion at the given confidence level, from `hits` successes in
// `trials` draws. Solved by bisection on the exact binomial tails.
struct ExactInterval {
  double lo = 0.0;
  double hi = 1.0;
};

ExactInterval clopper_pearson(uint64_t hits, uint64_t trials,
                              double confidence = 0.95);

}  // namespace bbeval
