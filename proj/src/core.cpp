#include "bbeval/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace bbeval {

namespace {

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Seed
// ---------------------------------------------------------------------------

Seed Seed::from_value(double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError("seed value must lie in [0,1], got " + fmt_real(v));
  }
  long double scaled = static_cast<long double>(v) * 0x1.0p64L;
  if (scaled >= 0x1.0p64L) return Seed{UINT64_MAX};  // v == 1.0
  return Seed{static_cast<uint64_t>(scaled)};
}

// ---------------------------------------------------------------------------
// LossFn
// ---------------------------------------------------------------------------

LossFn LossFn::zero_one() {
  return LossFn(Kind::ZeroOne, "zero-one", 1.0, nullptr);
}

LossFn LossFn::thresholded(double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw ConfigError("thresholded loss needs a finite radius >= 0");
  }
  return LossFn(Kind::Thresholded, "thresholded(" + fmt_real(radius) + ")",
                1.0, nullptr, radius);
}

LossFn LossFn::squared() {
  return LossFn(Kind::Squared, "squared",
                std::numeric_limits<double>::infinity(), nullptr);
}

LossFn LossFn::absolute() {
  return LossFn(Kind::Absolute, "absolute",
                std::numeric_limits<double>::infinity(), nullptr);
}

LossFn LossFn::custom(std::string name, double bound,
                      std::function<double(double, int64_t)> fn) {
  if (!fn) throw ConfigError("custom loss needs a function");
  if (std::isnan(bound) || bound < 0.0) {
    throw ConfigError("custom loss bound must be >= 0 (may be +inf)");
  }
  return LossFn(Kind::Custom, std::move(name), bound, std::move(fn));
}

double LossFn::operator()(double yhat, int64_t y) const {
  const double yd = static_cast<double>(y);
  switch (kind_) {
    case Kind::ZeroOne:
      return yhat == yd ? 0.0 : 1.0;
    case Kind::Thresholded:
      return std::abs(yhat - yd) > radius_ ? 1.0 : 0.0;
    case Kind::Squared:
      return (yhat - yd) * (yhat - yd);
    case Kind::Absolute:
      return std::abs(yhat - yd);
    case Kind::Custom: {
      double v = fn_(yhat, y);
      if (std::isnan(v) || v < 0.0) {
        throw ContractError("loss '" + name_ + "' returned " + fmt_real(v) +
                            " (must be nonnegative)");
      }
      // Tolerance-free: a declared bound is a hard promise.
      if (v > bound_) {
        throw ContractError("loss '" + name_ + "' exceeded its bound: " +
                            fmt_real(v) + " > " + fmt_real(bound_));
      }
      return v;
    }
  }
  return 0.0;  // unreachable
}

// ---------------------------------------------------------------------------
// ComparisonFn
// ---------------------------------------------------------------------------

ComparisonFn ComparisonFn::loss_difference(const LossFn& loss) {
  if (!loss.bounded()) {
    throw ConfigError("loss-difference comparison needs a bounded loss, got '" +
                      loss.name() + "'");
  }
  return ComparisonFn(Kind::LossDifference, "loss-difference[" + loss.name() + "]",
                      loss.bound(),
                      [loss](double a, double b, int64_t y) {
                        return loss(a, y) - loss(b, y);
                      });
}

ComparisonFn ComparisonFn::loss_order_indicator(const LossFn& loss) {
  return ComparisonFn(Kind::LossOrderIndicator,
                      "loss-order[" + loss.name() + "]", 1.0,
                      [loss](double a, double b, int64_t y) {
                        double la = loss(a, y), lb = loss(b, y);
                        return la > lb ? 1.0 : (la < lb ? -1.0 : 0.0);
                      });
}

ComparisonFn ComparisonFn::custom(std::string name, double bound,
                                  std::function<double(double, double, int64_t)> fn) {
  if (!fn) throw ConfigError("custom comparison needs a function");
  if (!(bound >= 0.0) || !std::isfinite(bound)) {
    throw ConfigError("comparison bound must be finite and >= 0");
  }
  return ComparisonFn(Kind::Custom, std::move(name), bound, std::move(fn));
}

double ComparisonFn::operator()(double yhat0, double yhat1, int64_t y) const {
  double v = fn_(yhat0, yhat1, y);
  if (std::isnan(v) || std::abs(v) > bound_) {
    throw ContractError("comparison '" + name_ + "' returned " + fmt_real(v) +
                        ", outside [-B, B] with B = " + fmt_real(bound_));
  }
  return v;
}

// ---------------------------------------------------------------------------
// Builtin algorithms
// ---------------------------------------------------------------------------

AlgorithmHandle constant_predictor(double c) {
  std::string name = "constant(" + fmt_real(c) + ")";
  return AlgorithmHandle{
      name, [c, name](const Dataset&, Seed) {
        return FittedModel{[c](int64_t) { return c; }, name};
      }};
}

namespace {

// Smallest label among those with maximal multiplicity.
int64_t modal_label(const Dataset& data) {
  std::map<int64_t, size_t> counts;
  for (const auto& p : data) ++counts[p.y];
  int64_t best = 0;
  size_t best_n = 0;
  for (const auto& [label, n] : counts) {  // ascending label order
    if (n > best_n) { best = label; best_n = n; }
  }
  return best;
}

uint64_t abs_distance(int64_t a, int64_t b) {
  return a >= b ? static_cast<uint64_t>(a) - static_cast<uint64_t>(b)
                : static_cast<uint64_t>(b) - static_cast<uint64_t>(a);
}

}  // namespace

AlgorithmHandle majority_vote() {
  return AlgorithmHandle{
      "majority-vote", [](const Dataset& data, Seed) {
        int64_t label = data.empty() ? 0 : modal_label(data);
        double c = static_cast<double>(label);
        return FittedModel{[c](int64_t) { return c; },
                           "majority-vote=" + fmt_real(c)};
      }};
}

AlgorithmHandle knn(int k) {
  if (k < 1) throw ConfigError("knn needs k >= 1");
  std::string name = std::to_string(k) + "-nn";
  return AlgorithmHandle{
      name, [k, name](const Dataset& data, Seed) {
        if (data.empty()) {
          // Documented fallback: with nothing to fit, behave as constant-0.
          return FittedModel{[](int64_t) { return 0.0; }, name + "[empty->0]"};
        }
        if (data.size() < static_cast<size_t>(k)) {
          throw ContractError(name + ": need at least k=" + std::to_string(k) +
                              " points, got " + std::to_string(data.size()));
        }
        Dataset train = data;
        return FittedModel{
            [k, train](int64_t query) {
              // Rank by (distance, feature, label) so equidistant neighbors
              // resolve toward the smaller feature value, deterministically.
              std::vector<size_t> order(train.size());
              for (size_t i = 0; i < order.size(); ++i) order[i] = i;
              std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                auto da = abs_distance(train[a].x, query);
                auto db = abs_distance(train[b].x, query);
                if (da != db) return da < db;
                if (train[a].x != train[b].x) return train[a].x < train[b].x;
                return train[a].y < train[b].y;
              });
              Dataset neighbors;
              for (int i = 0; i < k; ++i) neighbors.push_back(train[order[i]]);
              return static_cast<double>(modal_label(neighbors));
            },
            name + "[" + std::to_string(train.size()) + " pts]"};
      }};
}

AlgorithmHandle empirical_mean() {
  return AlgorithmHandle{
      "empirical-mean", [](const Dataset& data, Seed) {
        double mean = 0.0;
        if (!data.empty()) {
          long double sum = 0.0L;
          for (const auto& p : data) sum += static_cast<long double>(p.y);
          mean = static_cast<double>(sum / data.size());
        }
        return FittedModel{[mean](int64_t) { return mean; },
                           "empirical-mean=" + fmt_real(mean)};
      }};
}

AlgorithmHandle seed_coin(double threshold) {
  std::string name = "seed-coin(" + fmt_real(threshold) + ")";
  return AlgorithmHandle{
      name, [threshold, name](const Dataset&, Seed seed) {
        double c = seed.value() < threshold ? 0.0 : 1.0;
        return FittedModel{[c](int64_t) { return c; }, name + "=" + fmt_real(c)};
      }};
}

std::vector<AlgorithmHandle> builtin_algorithms() {
  return {constant_predictor(0.0), constant_predictor(1.0), majority_vote(),
          knn(1), empirical_mean(), seed_coin()};
}

// ---------------------------------------------------------------------------
// Contract probes
// ---------------------------------------------------------------------------

void check_fit_deterministic(const AlgorithmHandle& alg, const Dataset& data,
                             Seed seed, int probes, RngStream rng) {
  FittedModel a = alg.fit(data, seed);
  FittedModel b = alg.fit(data, seed);
  for (int i = 0; i < probes; ++i) {
    // Mix small queries (near the data) with arbitrary 50-bit ones.
    int64_t q;
    if (i % 2 == 0 && !data.empty()) {
      q = data[rng.next_below(data.size())].x + static_cast<int64_t>(rng.next_below(5)) - 2;
    } else {
      q = static_cast<int64_t>(rng.next_u64() >> 14);
    }
    if (a(q) != b(q)) {
      throw ContractError("algorithm '" + alg.name +
                          "' is not deterministic given its seed (query " +
                          std::to_string(q) + ")");
    }
  }
}

void check_antisymmetry(const ComparisonFn& psi, int probes, RngStream rng) {
  for (int i = 0; i < probes; ++i) {
    double a = static_cast<double>(rng.next_below(7)) - 3.0;
    double b = static_cast<double>(rng.next_below(7)) - 3.0;
    int64_t y = static_cast<int64_t>(rng.next_below(7)) - 3;
    double s = psi(a, b, y) + psi(b, a, y);
    if (std::abs(s) > 1e-12) {
      throw ContractError("comparison '" + psi.name() + "' is not antisymmetric at (" +
                          std::to_string(a) + "," + std::to_string(b) + "," +
                          std::to_string(y) + ")");
    }
  }
}

void check_loss_range(const LossFn& loss, int probes, RngStream rng) {
  for (int i = 0; i < probes; ++i) {
    double yhat = static_cast<double>(rng.next_below(21)) - 10.0;
    int64_t y = static_cast<int64_t>(rng.next_below(21)) - 10;
    double v = loss(yhat, y);  // custom losses self-check here
    if (std::isnan(v) || v < 0.0 || v > loss.bound()) {
      throw ContractError("loss '" + loss.name() + "' left its declared range");
    }
  }
}

}  // namespace bbeval
