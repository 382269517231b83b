#include "bbeval/btest.hpp"

#include <cmath>
#include <string>

namespace bbeval {

BatchLayout batch_layout(size_t N, size_t n) {
  BatchLayout out;
  out.batch = n + 1;
  out.m = N / out.batch;
  out.used = out.m * out.batch;
  return out;
}

namespace {

// Training set of batch j: points [j*(n+1), j*(n+1)+n); held-out point is
// index j*(n+1)+n.
Dataset batch_train(const Dataset& input, size_t n, size_t j) {
  const size_t lo = j * (n + 1);
  return Dataset(input.begin() + lo, input.begin() + lo + n);
}

const DataPoint& batch_test(const Dataset& input, size_t n, size_t j) {
  return input[j * (n + 1) + n];
}

void require_batches(const BatchLayout& lay, size_t N, size_t n,
                     const std::string& who) {
  if (lay.m == 0) {
    throw ConfigError(who + ": need at least n+1 = " + std::to_string(n + 1) +
                      " points, got " + std::to_string(N));
  }
}

}  // namespace

TestProtocol binom_test_protocol(const BinomTestConfig& cfg) {
  if (!cfg.loss.binary()) {
    throw ConfigError("binom_test_protocol needs a {0,1}-valued loss, got '" +
                      cfg.loss.name() + "'");
  }
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) {
    throw ConfigError("binom_test_protocol needs tau in (0,1)");
  }
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw ConfigError("binom_test_protocol needs alpha in (0,1)");
  }
  TestProtocol p;
  p.name = "binom[n=" + std::to_string(cfg.n) + ",tau=" + std::to_string(cfg.tau) +
           ",alpha=" + std::to_string(cfg.alpha) + "]";
  p.next = [cfg, name = p.name](const ProtocolContext& ctx) -> ProtocolStep {
    const BatchLayout lay = batch_layout(ctx.input.size(), cfg.n);
    require_batches(lay, ctx.input.size(), cfg.n, name);
    const size_t r = ctx.queries.size();
    if (r < lay.m) {
      return Query{batch_train(ctx.input, cfg.n, r), Seed::draw(ctx.rng)};
    }
    // All batches fitted: S = number of held-out mistakes.
    uint64_t S = 0;
    for (size_t j = 0; j < lay.m; ++j) {
      const DataPoint& z = batch_test(ctx.input, cfg.n, j);
      S += cfg.loss(ctx.models[j](z.x), z.y) != 0.0 ? 1 : 0;
    }
    CriticalValue cv = binomial_critical(lay.m, cfg.tau, cfg.alpha);
    const double zeta = ctx.rng.next_unit();
    const bool reject = S < cv.k_star || (S == cv.k_star && zeta <= cv.a_star);
    return Decide{reject ? 1 : 0};
  };
  return p;
}

TestProtocol compare_binom_protocol(size_t n, double alpha,
                                    const ComparisonFn& psi) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("compare_binom_protocol needs alpha in (0,1)");
  }
  TestProtocol p;
  p.name = "compare-binom[n=" + std::to_string(n) +
           ",alpha=" + std::to_string(alpha) + "]";
  p.next = [n, alpha, psi, name = p.name](const ProtocolContext& ctx) -> ProtocolStep {
    const BatchLayout lay = batch_layout(ctx.input.size(), n);
    require_batches(lay, ctx.input.size(), n, name);
    const size_t r = ctx.queries.size();
    if (r < lay.m) {
      return Query{batch_train(ctx.input, n, r), Seed::draw(ctx.rng)};
    }
    if (ctx.models1.size() != ctx.models.size()) {
      throw ContractError(name + " must run under run_compare_test");
    }
    uint64_t neg = 0, nonzero = 0;
    for (size_t j = 0; j < lay.m; ++j) {
      const DataPoint& z = batch_test(ctx.input, n, j);
      double v = psi(ctx.models[j](z.x), ctx.models1[j](z.x), z.y);
      if (v == 0.0) continue;
      ++nonzero;
      if (v < 0.0) ++neg;
    }
    if (nonzero == 0) return Decide{0};  // no evidence either way
    // Few negative signs = algorithm 1 ahead. Exact randomized lower-tail
    // rule on Binomial(m_nz, 1/2); conditional size is exactly alpha at the
    // symmetric null.
    CriticalValue cv = binomial_critical(nonzero, 0.5, alpha);
    const double zeta = ctx.rng.next_unit();
    const bool reject = neg < cv.k_star || (neg == cv.k_star && zeta <= cv.a_star);
    return Decide{reject ? 1 : 0};
  };
  return p;
}

TestProtocol cv_threshold_protocol(size_t K, double tau, const LossFn& loss) {
  if (K < 2) throw ConfigError("cv_threshold_protocol needs K >= 2");
  TestProtocol p;
  p.name = "cv-threshold[K=" + std::to_string(K) + ",tau=" + std::to_string(tau) + "]";
  p.next = [K, tau, loss, name = p.name](const ProtocolContext& ctx) -> ProtocolStep {
    const size_t N = ctx.input.size();
    if (N < K || N % K != 0) {
      throw ConfigError(name + ": K must divide the input size, got N = " +
                        std::to_string(N));
    }
    const size_t fold = N / K;
    const size_t r = ctx.queries.size();
    if (r < K) {
      // Fit on everything outside fold r.
      Dataset train;
      train.reserve(N - fold);
      train.insert(train.end(), ctx.input.begin(), ctx.input.begin() + r * fold);
      train.insert(train.end(), ctx.input.begin() + (r + 1) * fold, ctx.input.end());
      return Query{std::move(train), Seed::draw(ctx.rng)};
    }
    double total = 0.0;
    for (size_t k = 0; k < K; ++k) {
      for (size_t i = k * fold; i < (k + 1) * fold; ++i) {
        total += loss(ctx.models[k](ctx.input[i].x), ctx.input[i].y);
      }
    }
    return Decide{total / static_cast<double>(N) < tau ? 1 : 0};
  };
  return p;
}

}  // namespace bbeval
