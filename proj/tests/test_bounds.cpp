#include <cmath>

#include "bbeval/bounds.hpp"
#include "bbeval/errors.hpp"
#include "doctest.h"

using namespace bbeval;

TEST_CASE("threshold inflation: tau * (1 + (1/alpha - 1)/N)") {
  CHECK(inflated_threshold(0.5, 0.05, 100) ==
        doctest::Approx(0.595).epsilon(1e-15));
  CHECK(inflated_threshold(0.5, 0.5, 8) ==
        doctest::Approx(0.5625).epsilon(1e-15));
  // More data, less inflation.
  CHECK(inflated_threshold(0.5, 0.05, 1000) < 0.595);
}

TEST_CASE("evaluation ceiling: frozen rational value 10/81") {
  // alpha=.05, tau=.5, N=n=100, R=0, Rmax=1: tilde = .595 and the bound is
  // .05 * (1 + .595/.405)^1 = .05/.405 = 10/81.
  EvalBoundInputs in{0.05, 0.5, 100, 100, 0.0, 1.0};
  CHECK(eval_bound_in_domain(in));
  CHECK(eval_power_bound(in) == doctest::Approx(10.0 / 81.0).epsilon(1e-12));
}

TEST_CASE("evaluation ceiling clamps at one and decreases in R") {
  // Many batches at tiny risk: the raw formula explodes past 1.
  EvalBoundInputs big{0.05, 0.5, 1000, 10, 0.0, 1.0};
  CHECK(eval_power_bound(big) == 1.0);

  EvalBoundInputs in{0.05, 0.5, 100, 100, 0.0, 1.0};
  double prev = 2.0;
  for (double R : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
    in.risk = R;
    double b = eval_power_bound(in);
    CHECK(b <= prev + 1e-15);
    prev = b;
  }
}

TEST_CASE("evaluation ceiling domain: inflated threshold must undershoot the max") {
  // N=4 at alpha=.05: tilde = .5 * (1 + 19/4) = 2.875 >= 1.
  EvalBoundInputs out{0.05, 0.5, 4, 1, 0.0, 1.0};
  CHECK_FALSE(eval_bound_in_domain(out));
  CHECK_THROWS_AS(eval_power_bound(out), ConfigError);

  // R above the inflated threshold is outside the regime the bound describes.
  EvalBoundInputs high{0.05, 0.5, 100, 100, 0.99, 1.0};
  CHECK_THROWS_AS(eval_power_bound(high), ConfigError);
}

TEST_CASE("comparison ceiling: frozen rational value 2/27") {
  // alpha=.05, B=1, N=n=100, delta=.2, dmax=1: slack=.19 and the bound is
  // .05 * (1 + .39/.81) = .05 * 40/27 = 2/27.
  CompareBoundInputs in{0.05, 1.0, 100, 100, 0.2, 1.0};
  CHECK(compare_bound_in_domain(in));
  CHECK(compare_power_bound(in) == doctest::Approx(2.0 / 27.0).epsilon(1e-12));
}

TEST_CASE("comparison ceiling domain and growth in delta") {
  // Slack B(1/alpha - 1)/N = 19/8 swallows delta_max = 1.
  CompareBoundInputs out{0.05, 1.0, 8, 1, 0.5, 1.0};
  CHECK_FALSE(compare_bound_in_domain(out));
  CHECK_THROWS_AS(compare_power_bound(out), ConfigError);

  CompareBoundInputs neg{0.05, 1.0, 100, 100, -0.1, 1.0};
  CHECK_THROWS_AS(compare_power_bound(neg), ConfigError);

  CompareBoundInputs in{0.05, 1.0, 100, 100, 0.0, 1.0};
  double prev = 0.0;
  for (double d : {0.0, 0.1, 0.2, 0.3}) {
    in.delta = d;
    double b = compare_power_bound(in);
    CHECK(b >= prev - 1e-15);  // easier to detect a bigger advantage
    prev = b;
  }
}

TEST_CASE("risk-gap bounds are 2n*beta1 and sqrt(n)*beta2") {
  RiskGapBounds b = risk_gap_bounds(4, 0.25, 0.5);
  CHECK(b.mean_bound == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(b.rms_bound == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("regime classification against 2B/n^(1/q), pair variant doubled") {
  RegimeReport r = regime_classify(0.5, 1.0, 4, 1.0);
  CHECK(r.threshold == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.regime == Regime::PowerLimited);  // >= threshold counts as limited
  CHECK(r.margin == doctest::Approx(1.0).epsilon(1e-15));

  CHECK(regime_classify(0.49, 1.0, 4, 1.0).regime == Regime::Estimable);

  RegimeReport q2 = regime_classify(0.3, 2.0, 4, 1.0);
  CHECK(q2.threshold == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(q2.regime == Regime::Estimable);

  RegimeReport pair = regime_classify(0.5, 1.0, 4, 1.0, true);
  CHECK(pair.threshold == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pair.regime == Regime::Estimable);
}
