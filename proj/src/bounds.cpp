#include "bbeval/bounds.hpp"

#include <cmath>
#include <string>

#include "bbeval/errors.hpp"

namespace bbeval {

namespace {

void require_level(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0,1), got " + std::to_string(alpha));
  }
}

void require_sizes(uint64_t N, uint64_t n) {
  if (n == 0 || N == 0) throw ConfigError("need N >= 1 and n >= 1");
  if (n > N) throw ConfigError("training size n cannot exceed the budget N");
}

}  // namespace

double inflated_threshold(double tau, double alpha, uint64_t N) {
  require_level(alpha);
  if (N == 0) throw ConfigError("need N >= 1");
  if (!(tau >= 0.0)) throw ConfigError("tau must be >= 0");
  return tau * (1.0 + (1.0 / alpha - 1.0) / static_cast<double>(N));
}

bool eval_bound_in_domain(const EvalBoundInputs& in) {
  if (!(in.alpha > 0.0 && in.alpha < 1.0) || in.N == 0 || in.n == 0 || in.n > in.N) {
    return false;
  }
  double tilde = inflated_threshold(in.tau, in.alpha, in.N);
  return tilde < in.risk_max && in.risk <= tilde;
}

double eval_power_bound(const EvalBoundInputs& in) {
  require_level(in.alpha);
  require_sizes(in.N, in.n);
  const double tilde = inflated_threshold(in.tau, in.alpha, in.N);
  if (!(tilde < in.risk_max)) {
    throw ConfigError("power ceiling undefined: inflated threshold " +
                      std::to_string(tilde) + " >= extremal risk " +
                      std::to_string(in.risk_max));
  }
  if (in.risk > tilde) {
    throw ConfigError("power ceiling applies to risk <= inflated threshold");
  }
  const double base = 1.0 + (tilde - in.risk) / (in.risk_max - tilde);
  const double expo = static_cast<double>(in.N) / static_cast<double>(in.n);
  const double v = in.alpha * std::pow(base, expo);
  return v < 1.0 ? v : 1.0;
}

bool compare_bound_in_domain(const CompareBoundInputs& in) {
  if (!(in.alpha > 0.0 && in.alpha < 1.0) || in.N == 0 || in.n == 0 ||
      in.n > in.N || in.B < 0.0 || in.delta < 0.0) {
    return false;
  }
  double slack = in.B * (1.0 / in.alpha - 1.0) / static_cast<double>(in.N);
  return in.delta_max > slack;
}

double compare_power_bound(const CompareBoundInputs& in) {
  require_level(in.alpha);
  require_sizes(in.N, in.n);
  if (in.B < 0.0) throw ConfigError("comparison bound B must be >= 0");
  if (in.delta < 0.0) {
    throw ConfigError("power ceiling applies to advantage delta >= 0");
  }
  const double slack = in.B * (1.0 / in.alpha - 1.0) / static_cast<double>(in.N);
  if (!(in.delta_max > slack)) {
    throw ConfigError("power ceiling undefined: extremal advantage " +
                      std::to_string(in.delta_max) + " <= budget slack " +
                      std::to_string(slack));
  }
  const double base = 1.0 + (in.delta + slack) / (in.delta_max - slack);
  const double expo = static_cast<double>(in.N) / static_cast<double>(in.n);
  const double v = in.alpha * std::pow(base, expo);
  return v < 1.0 ? v : 1.0;
}

RiskGapBounds risk_gap_bounds(uint64_t n, double beta1, double beta2) {
  if (beta1 < 0.0 || beta2 < 0.0) throw ConfigError("instabilities must be >= 0");
  return RiskGapBounds{2.0 * static_cast<double>(n) * beta1,
                       std::sqrt(static_cast<double>(n)) * beta2};
}

RegimeReport regime_classify(double gamma_q, double q, uint64_t n, double B,
                             bool pair_variant) {
  if (!(q >= 1.0)) throw ConfigError("q must be >= 1");
  if (n == 0) throw ConfigError("need n >= 1");
  if (!(B > 0.0) || !std::isfinite(B)) {
    throw ConfigError("regime threshold needs a finite bound B > 0");
  }
  if (gamma_q < 0.0) throw ConfigError("gamma_q must be >= 0");
  RegimeReport out;
  const double scale = pair_variant ? 4.0 : 2.0;
  out.threshold = scale * B / std::pow(static_cast<double>(n), 1.0 / q);
  out.margin = gamma_q / out.threshold;
  out.regime = gamma_q >= out.threshold ? Regime::PowerLimited : Regime::Estimable;
  return out;
}

}  // namespace bbeval
