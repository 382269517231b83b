#include "bbeval/binomial.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "bbeval/errors.hpp"

namespace bbeval {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_prob(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(std::string(what) + " must lie in [0,1], got " +
                      std::to_string(p));
  }
}

// log C(m, k) via lgamma; exact to ~1e-14 relative for desk-scale m.
double log_choose(uint64_t m, uint64_t k) {
  return std::lgamma(static_cast<double>(m) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(m - k) + 1.0);
}

}  // namespace

double binomial_log_pmf(uint64_t m, double p, uint64_t k) {
  require_prob(p, "binomial p");
  if (k > m) return kNegInf;
  if (p == 0.0) return k == 0 ? 0.0 : kNegInf;
  if (p == 1.0) return k == m ? 0.0 : kNegInf;
  const double kk = static_cast<double>(k);
  const double mk = static_cast<double>(m - k);
  // log1p(-p) keeps (1-p)^(m-k) accurate for p near 0.
  return log_choose(m, k) + kk * std::log(p) + mk * std::log1p(-p);
}

double binomial_pmf(uint64_t m, double p, int64_t k) {
  if (k < 0 || static_cast<uint64_t>(k) > m) return 0.0;
  double lp = binomial_log_pmf(m, p, static_cast<uint64_t>(k));
  return lp == kNegInf ? 0.0 : std::exp(lp);
}

double binomial_cdf(uint64_t m, double p, int64_t k) {
  if (k < 0) return 0.0;
  if (static_cast<uint64_t>(k) >= m) return 1.0;
  // Sum the smaller tail for accuracy: lower tail directly, or 1 - upper.
  uint64_t ku = static_cast<uint64_t>(k);
  if (ku <= m / 2) {
    double s = 0.0;
    for (uint64_t i = 0; i <= ku; ++i) s += binomial_pmf(m, p, static_cast<int64_t>(i));
    return s < 1.0 ? s : 1.0;
  }
  double s = 0.0;
  for (uint64_t i = ku + 1; i <= m; ++i) s += binomial_pmf(m, p, static_cast<int64_t>(i));
  double c = 1.0 - s;
  return c > 0.0 ? c : 0.0;
}

CriticalValue binomial_critical(uint64_t m, double tau, double alpha) {
  require_prob(tau, "tau");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0,1), got " + std::to_string(alpha));
  }
  // Walk the pmf upward, keeping cum = P(S < k). The first k whose mass
  // cannot be fully spent (alpha - cum < pmf(k)) takes the leftover as the
  // randomization weight; that makes a_star land in [0, 1) by construction.
  double cum = 0.0;
  for (uint64_t k = 0; k <= m; ++k) {
    double pk = binomial_pmf(m, tau, static_cast<int64_t>(k));
    double leftover = alpha - cum;
    if (leftover < pk) {
      return CriticalValue{k, pk > 0.0 ? leftover / pk : 0.0};
    }
    cum += pk;
  }
  // alpha >= P(S <= m) = 1 cannot happen for alpha < 1; guard anyway.
  return CriticalValue{m, 0.0};
}

double randomized_lower_power(uint64_t m, const CriticalValue& cv, double R) {
  require_prob(R, "R");
  return binomial_cdf(m, R, static_cast<int64_t>(cv.k_star) - 1) +
         cv.a_star * binomial_pmf(m, R, static_cast<int64_t>(cv.k_star));
}

double binom_test_exact_power(uint64_t m, double tau, double alpha, double R) {
  return randomized_lower_power(m, binomial_critical(m, tau, alpha), R);
}

bool binom_closed_form_valid(uint64_t m, double tau, double alpha) {
  if (tau >= 1.0) return false;
  return std::log(alpha) < static_cast<double>(m) * std::log1p(-tau);
}

double binom_test_closed_form_power(uint64_t m, double tau, double alpha, double R) {
  require_prob(tau, "tau");
  require_prob(R, "R");
  if (tau >= 1.0) throw ConfigError("closed-form power needs tau < 1");
  double base = 1.0 + (tau - R) / (1.0 - tau);
  double v = alpha * std::pow(base, static_cast<double>(m));
  return v < 1.0 ? v : 1.0;
}

ExactInterval clopper_pearson(uint64_t hits, uint64_t trials, double confidence) {
  if (trials == 0) throw ConfigError("clopper_pearson needs trials >= 1");
  if (hits > trials) throw ConfigError("hits > trials");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw ConfigError("confidence must lie in (0,1)");
  }
  const double half = 0.5 * (1.0 - confidence);
  const int64_t k = static_cast<int64_t>(hits);

  // Monotone root-finding on the exact tails; 200 bisection steps pin the
  // endpoint to ~1e-60, far below every tolerance used downstream.
  auto bisect = [&](auto f) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (f(mid)) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
  };

  ExactInterval out;
  // Upper limit: largest p with P(S <= hits) >= half (P falls as p rises).
  out.hi = hits == trials
               ? 1.0
               : bisect([&](double p) { return binomial_cdf(trials, p, k) >= half; });
  // Lower limit: largest p with P(S >= hits) <= half.
  out.lo = hits == 0
               ? 0.0
               : bisect([&](double p) {
                   return 1.0 - binomial_cdf(trials, p, k - 1) <= half;
                 });
  return out;
}

}  // namespace bbeval
