#include "bbeval/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "bbeval/parallel.hpp"

namespace bbeval {

namespace {

// |v|^q with exact arithmetic for the common orders.
double qpow(double v, double q) {
  double a = std::abs(v);
  if (q == 1.0) return a;
  if (q == 2.0) return a * a;
  return std::pow(a, q);
}

double qroot(double v, double q) {
  if (v <= 0.0) return 0.0;
  if (q == 1.0) return v;
  if (q == 2.0) return std::sqrt(v);
  return std::pow(v, 1.0 / q);
}

Estimate exact_estimate(double value) { return Estimate{value, 0.0, 0, true}; }

Estimate mc_estimate(const McMoments& m, size_t i = 0) {
  return Estimate{m.mean(i), m.stderr_of_mean(i), m.trials, false};
}

// q-norm of a q-th-moment estimate, stderr via the delta method
// d(m^(1/q))/dm = m^(1/q - 1)/q.
Estimate qnorm_estimate(const Estimate& moment, double q) {
  Estimate out = moment;
  out.value = qroot(moment.value, q);
  if (moment.value > 0.0 && !moment.exact) {
    out.stderr_ = moment.stderr_ * std::pow(moment.value, 1.0 / q - 1.0) / q;
  } else {
    out.stderr_ = 0.0;
  }
  return out;
}

StabilityEstimate collect_stability(std::vector<Estimate> per_unit) {
  StabilityEstimate out;
  out.per_unit = std::move(per_unit);
  out.argmax = 1;
  for (size_t j = 0; j < out.per_unit.size(); ++j) {
    if (out.per_unit[j].value > out.per_unit[out.argmax - 1].value) {
      out.argmax = j + 1;
    }
  }
  out.overall = out.per_unit.empty() ? Estimate{} : out.per_unit[out.argmax - 1];
  return out;
}

}  // namespace

std::string estimate_csv_row(const std::string& estimator, const Estimate& e,
                             uint64_t master_seed) {
  char buf[160];
  std::snprintf(buf, sizeof buf, ",%.12g,%.12g,%llu,%llu", e.value, e.stderr_,
                static_cast<unsigned long long>(e.trials),
                static_cast<unsigned long long>(master_seed));
  return estimator + buf;
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

uint64_t tuple_count(size_t support, size_t k, uint64_t budget) {
  uint64_t total = 1;
  for (size_t i = 0; i < k; ++i) {
    if (total > budget / (support == 0 ? 1 : support)) return budget + 1;
    total *= support;
    if (total > budget) return budget + 1;
  }
  return total;
}

bool enumerable(const FiniteDistribution& dist, size_t k, uint64_t budget) {
  return tuple_count(dist.support_size(), k, budget) <= budget;
}

void for_each_tuple(const FiniteDistribution& dist, size_t k,
                    const std::function<void(std::span<const DataPoint>, double)>& visit,
                    uint64_t budget) {
  const auto& atoms = dist.atoms();
  const size_t s = atoms.size();
  if (tuple_count(s, k, budget) > budget) {
    throw BudgetError("enumeration over " + std::to_string(s) + "^" +
                      std::to_string(k) + " tuples exceeds the budget of " +
                      std::to_string(budget));
  }
  std::vector<size_t> idx(k, 0);
  std::vector<DataPoint> pts(k);
  for (;;) {
    double w = 1.0;
    for (size_t i = 0; i < k; ++i) {
      pts[i] = atoms[idx[i]].point;
      w *= atoms[idx[i]].p;
    }
    visit({pts.data(), pts.size()}, w);
    // Odometer increment.
    size_t pos = k;
    while (pos > 0) {
      --pos;
      if (++idx[pos] < s) break;
      idx[pos] = 0;
      if (pos == 0) return;
    }
    if (k == 0) return;
  }
}

SeedGrid SeedGrid::equispaced(int m) {
  if (m < 1) throw ConfigError("seed grid needs m >= 1");
  SeedGrid g;
  g.seeds.reserve(m);
  for (int i = 0; i < m; ++i) {
    g.seeds.push_back(Seed::from_value((i + 0.5) / m));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Risk
// ---------------------------------------------------------------------------

Estimate model_risk_exact(const FittedModel& model,
                          const FiniteDistribution& dist, const LossFn& loss) {
  double v = 0.0;
  for (const auto& a : dist.atoms()) {
    v += a.p * loss(model(a.point.x), a.point.y);
  }
  return exact_estimate(v);
}

Estimate algorithm_risk_mc(const AlgorithmHandle& alg,
                           const FiniteDistribution& dist, size_t n,
                           const LossFn& loss, uint64_t trials, RngStream rng,
                           int workers) {
  if (trials == 0) throw ConfigError("algorithm_risk_mc needs trials >= 1");
  McMoments m = mc_run(trials, 1, workers, [&](uint64_t t, double* out) {
    RngStream trial = rng.substream(t);
    Dataset pts = dist.sample_dataset(n + 1, trial);
    Seed seed = Seed::draw(trial);
    Dataset train(pts.begin(), pts.end() - 1);
    FittedModel f = alg.fit(train, seed);
    out[0] = loss(f(pts.back().x), pts.back().y);
  });
  return mc_estimate(m);
}

Estimate algorithm_risk_exact(const AlgorithmHandle& alg,
                              const FiniteDistribution& dist, size_t n,
                              const LossFn& loss, const SeedGrid& grid,
                              uint64_t budget) {
  if (grid.seeds.empty()) throw ConfigError("seed grid must be nonempty");
  double total = 0.0;
  for_each_tuple(dist, n + 1, [&](std::span<const DataPoint> pts, double w) {
    Dataset train(pts.begin(), pts.end() - 1);
    const DataPoint& test = pts.back();
    double over_seeds = 0.0;
    for (const Seed& seed : grid.seeds) {
      FittedModel f = alg.fit(train, seed);
      over_seeds += loss(f(test.x), test.y);
    }
    total += w * over_seeds / static_cast<double>(grid.seeds.size());
  }, budget);
  return exact_estimate(total);
}

Estimate cv_estimate(const AlgorithmHandle& alg, const Dataset& data, size_t K,
                     const LossFn& loss, RngStream rng, bool shuffle) {
  const size_t N = data.size();
  if (K < 2 || K > N) throw ConfigError("cv needs 2 <= K <= N");
  if (N % K != 0) {
    throw ConfigError("cv needs K to divide the data size evenly: " +
                      std::to_string(N) + " % " + std::to_string(K) + " != 0");
  }
  Dataset work = data;
  if (shuffle) {
    for (size_t i = N - 1; i > 0; --i) {
      std::swap(work[i], work[rng.next_below(i + 1)]);
    }
  }
  const size_t fold = N / K;
  double total = 0.0;
  for (size_t k = 0; k < K; ++k) {
    const size_t lo = k * fold, hi = lo + fold;
    Dataset train;
    train.reserve(N - fold);
    train.insert(train.end(), work.begin(), work.begin() + lo);
    train.insert(train.end(), work.begin() + hi, work.end());
    FittedModel f = alg.fit(train, Seed::draw(rng));
    for (size_t i = lo; i < hi; ++i) total += loss(f(work[i].x), work[i].y);
  }
  return exact_estimate(total / static_cast<double>(N));
}

Estimate holdout_estimate(const FittedModel& model, const Dataset& holdout,
                          const LossFn& loss) {
  if (holdout.empty()) throw ConfigError("holdout set must be nonempty");
  double sum = 0.0, sumsq = 0.0;
  for (const auto& pt : holdout) {
    double v = loss(model(pt.x), pt.y);
    sum += v;
    sumsq += v * v;
  }
  const double n = static_cast<double>(holdout.size());
  Estimate out;
  out.value = sum / n;
  out.trials = holdout.size();
  if (holdout.size() > 1) {
    double var = (sumsq - n * out.value * out.value) / (n - 1.0);
    out.stderr_ = var > 0.0 ? std::sqrt(var / n) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

namespace {

// Shared core for the two MC stability flavors: score(full_fit, loo_fit,
// test_point) is the quantity whose q-th moment gets estimated per left-out
// position.
template <class Score>
StabilityEstimate stability_mc_core(
    const std::function<FittedModel(const Dataset&, Seed)>& fit0,
    const FiniteDistribution& dist, size_t n, double q, uint64_t trials,
    RngStream rng, int workers, bool all_units, Score score) {
  if (n == 0) throw ConfigError("stability needs n >= 1");
  if (trials == 0) throw ConfigError("stability_mc needs trials >= 1");
  const size_t dim = all_units ? n : 1;
  McMoments m = mc_run(trials, dim, workers, [&](uint64_t t, double* out) {
    RngStream trial = rng.substream(t);
    Dataset pts = dist.sample_dataset(n + 1, trial);
    Seed seed = Seed::draw(trial);
    Dataset train(pts.begin(), pts.end() - 1);
    const DataPoint& test = pts.back();
    FittedModel full = fit0(train, seed);
    for (size_t d = 0; d < dim; ++d) {
      const size_t j = all_units ? d + 1 : n;  // left-out position, 1-based
      Dataset loo;
      loo.reserve(n - 1);
      for (size_t i = 0; i < n; ++i) {
        if (i != j - 1) loo.push_back(train[i]);
      }
      FittedModel dropped = fit0(loo, seed);  // same seed on both fits
      out[d] = qpow(score(full, dropped, test), q);
    }
  });
  std::vector<Estimate> per_unit;
  per_unit.reserve(dim);
  for (size_t d = 0; d < dim; ++d) {
    per_unit.push_back(qnorm_estimate(mc_estimate(m, d), q));
  }
  return collect_stability(std::move(per_unit));
}

template <class Score>
StabilityEstimate stability_exact_core(
    const std::function<FittedModel(const Dataset&, Seed)>& fit0,
    const FiniteDistribution& dist, size_t n, double q, const SeedGrid& grid,
    uint64_t budget, Score score) {
  if (n == 0) throw ConfigError("stability needs n >= 1");
  if (grid.seeds.empty()) throw ConfigError("seed grid must be nonempty");
  std::vector<double> moments(n, 0.0);
  for_each_tuple(dist, n + 1, [&](std::span<const DataPoint> pts, double w) {
    Dataset train(pts.begin(), pts.end() - 1);
    const DataPoint& test = pts.back();
    for (const Seed& seed : grid.seeds) {
      FittedModel full = fit0(train, seed);
      const double ws = w / static_cast<double>(grid.seeds.size());
      for (size_t j = 1; j <= n; ++j) {
        Dataset loo;
        loo.reserve(n - 1);
        for (size_t i = 0; i < n; ++i) {
          if (i != j - 1) loo.push_back(train[i]);
        }
        FittedModel dropped = fit0(loo, seed);
        moments[j - 1] += ws * qpow(score(full, dropped, test), q);
      }
    }
  }, budget);
  std::vector<Estimate> per_unit;
  per_unit.reserve(n);
  for (double mom : moments) {
    per_unit.push_back(qnorm_estimate(exact_estimate(mom), q));
  }
  return collect_stability(std::move(per_unit));
}

}  // namespace

StabilityEstimate stability_mc(const AlgorithmHandle& alg,
                               const FiniteDistribution& dist, size_t n,
                               double q, const LossFn& loss, uint64_t trials,
                               RngStream rng, int workers, bool all_units) {
  return stability_mc_core(
      alg.fit, dist, n, q, trials, rng, workers, all_units,
      [&loss](const FittedModel& full, const FittedModel& dropped,
              const DataPoint& z) {
        return loss(full(z.x), z.y) - loss(dropped(z.x), z.y);
      });
}

StabilityEstimate stability_exact(const AlgorithmHandle& alg,
                                  const FiniteDistribution& dist, size_t n,
                                  double q, const LossFn& loss,
                                  const SeedGrid& grid, uint64_t budget) {
  return stability_exact_core(
      alg.fit, dist, n, q, grid, budget,
      [&loss](const FittedModel& full, const FittedModel& dropped,
              const DataPoint& z) {
        return loss(full(z.x), z.y) - loss(dropped(z.x), z.y);
      });
}

namespace {

// Adapter: treat the PAIR of algorithms as one fit whose "model" carries both
// predictions; score applies psi to each side.
struct PairFit {
  const AlgorithmHandle* a0;
  const AlgorithmHandle* a1;

  struct Both {
    FittedModel m0, m1;
  };

  Both operator()(const Dataset& d, Seed s) const {
    return Both{a0->fit(d, s), a1->fit(d, s)};
  }
};

}  // namespace

StabilityEstimate pair_stability_mc(const AlgorithmHandle& alg0,
                                    const AlgorithmHandle& alg1,
                                    const ComparisonFn& psi,
                                    const FiniteDistribution& dist, size_t n,
                                    double q, uint64_t trials, RngStream rng,
                                    int workers, bool all_units) {
  PairFit pair{&alg0, &alg1};
  if (n == 0) throw ConfigError("stability needs n >= 1");
  if (trials == 0) throw ConfigError("stability_mc needs trials >= 1");
  const size_t dim = all_units ? n : 1;
  McMoments m = mc_run(trials, dim, workers, [&](uint64_t t, double* out) {
    RngStream trial = rng.substream(t);
    Dataset pts = dist.sample_dataset(n + 1, trial);
    Seed seed = Seed::draw(trial);
    Dataset train(pts.begin(), pts.end() - 1);
    const DataPoint& test = pts.back();
    auto full = pair(train, seed);
    double base = psi(full.m0(test.x), full.m1(test.x), test.y);
    for (size_t d = 0; d < dim; ++d) {
      const size_t j = all_units ? d + 1 : n;
      Dataset loo;
      loo.reserve(n - 1);
      for (size_t i = 0; i < n; ++i) {
        if (i != j - 1) loo.push_back(train[i]);
      }
      auto dropped = pair(loo, seed);
      double alt = psi(dropped.m0(test.x), dropped.m1(test.x), test.y);
      out[d] = qpow(base - alt, q);
    }
  });
  std::vector<Estimate> per_unit;
  per_unit.reserve(dim);
  for (size_t d = 0; d < dim; ++d) {
    per_unit.push_back(qnorm_estimate(mc_estimate(m, d), q));
  }
  return collect_stability(std::move(per_unit));
}

StabilityEstimate pair_stability_exact(const AlgorithmHandle& alg0,
                                       const AlgorithmHandle& alg1,
                                       const ComparisonFn& psi,
                                       const FiniteDistribution& dist, size_t n,
                                       double q, const SeedGrid& grid,
                                       uint64_t budget) {
  if (n == 0) throw ConfigError("stability needs n >= 1");
  if (grid.seeds.empty()) throw ConfigError("seed grid must be nonempty");
  PairFit pair{&alg0, &alg1};
  std::vector<double> moments(n, 0.0);
  for_each_tuple(dist, n + 1, [&](std::span<const DataPoint> pts, double w) {
    Dataset train(pts.begin(), pts.end() - 1);
    const DataPoint& test = pts.back();
    for (const Seed& seed : grid.seeds) {
      auto full = pair(train, seed);
      double base = psi(full.m0(test.x), full.m1(test.x), test.y);
      const double ws = w / static_cast<double>(grid.seeds.size());
      for (size_t j = 1; j <= n; ++j) {
        Dataset loo;
        loo.reserve(n - 1);
        for (size_t i = 0; i < n; ++i) {
          if (i != j - 1) loo.push_back(train[i]);
        }
        auto dropped = pair(loo, seed);
        double alt = psi(dropped.m0(test.x), dropped.m1(test.x), test.y);
        moments[j - 1] += ws * qpow(base - alt, q);
      }
    }
  }, budget);
  std::vector<Estimate> per_unit;
  per_unit.reserve(n);
  for (double mom : moments) {
    per_unit.push_back(qnorm_estimate(exact_estimate(mom), q));
  }
  return collect_stability(std::move(per_unit));
}

// ---------------------------------------------------------------------------
// Comparison advantage
// ---------------------------------------------------------------------------

Estimate delta_mc(const AlgorithmHandle& alg0, const AlgorithmHandle& alg1,
                  const ComparisonFn& psi, const FiniteDistribution& dist,
                  size_t n, uint64_t trials, RngStream rng, int workers) {
  if (trials == 0) throw ConfigError("delta_mc needs trials >= 1");
  McMoments m = mc_run(trials, 1, workers, [&](uint64_t t, double* out) {
    RngStream trial = rng.substream(t);
    Dataset pts = dist.sample_dataset(n + 1, trial);
    Seed seed = Seed::draw(trial);
    Dataset train(pts.begin(), pts.end() - 1);
    FittedModel f0 = alg0.fit(train, seed);
    FittedModel f1 = alg1.fit(train, seed);  // same data, same seed
    out[0] = psi(f0(pts.back().x), f1(pts.back().x), pts.back().y);
  });
  return mc_estimate(m);
}

Estimate delta_exact(const AlgorithmHandle& alg0, const AlgorithmHandle& alg1,
                     const ComparisonFn& psi, const FiniteDistribution& dist,
                     size_t n, const SeedGrid& grid, uint64_t budget) {
  if (grid.seeds.empty()) throw ConfigError("seed grid must be nonempty");
  double total = 0.0;
  for_each_tuple(dist, n + 1, [&](std::span<const DataPoint> pts, double w) {
    Dataset train(pts.begin(), pts.end() - 1);
    const DataPoint& test = pts.back();
    double over_seeds = 0.0;
    for (const Seed& seed : grid.seeds) {
      FittedModel f0 = alg0.fit(train, seed);
      FittedModel f1 = alg1.fit(train, seed);
      over_seeds += psi(f0(test.x), f1(test.x), test.y);
    }
    total += w * over_seeds / static_cast<double>(grid.seeds.size());
  }, budget);
  return exact_estimate(total);
}

// ---------------------------------------------------------------------------
// Consistency gap
// ---------------------------------------------------------------------------

ConsistencyGap consistency_gap(const AlgorithmHandle& alg,
                               const FiniteDistribution& dist, size_t n,
                               const LossFn& loss, uint64_t budget) {
  // Two-seed probe: a deterministic algorithm must ignore its seed entirely.
  {
    Dataset probe;
    for (const auto& a : dist.atoms()) probe.push_back(a.point);
    for (const Dataset& d : {probe, Dataset{probe.front()}, Dataset{}}) {
      FittedModel fa = alg.fit(d, Seed::from_value(0.25));
      FittedModel fb = alg.fit(d, Seed::from_value(0.75));
      for (const auto& a : dist.atoms()) {
        if (fa(a.point.x) != fb(a.point.x)) {
          throw ContractError("consistency_gap needs a deterministic algorithm; '" +
                              alg.name + "' changed with its seed");
        }
      }
    }
  }
  const Seed seed = Seed::from_value(0.5);
  std::vector<double> weights, risks;
  for_each_tuple(dist, n, [&](std::span<const DataPoint> pts, double w) {
    Dataset train(pts.begin(), pts.end());
    FittedModel f = alg.fit(train, seed);
    weights.push_back(w);
    risks.push_back(model_risk_exact(f, dist, loss).value);
  }, budget);

  ConsistencyGap out;
  for (size_t i = 0; i < risks.size(); ++i) out.average_risk += weights[i] * risks[i];
  double mean_abs = 0.0, mean_sq = 0.0;
  for (size_t i = 0; i < risks.size(); ++i) {
    double gap = risks[i] - out.average_risk;
    mean_abs += weights[i] * std::abs(gap);
    mean_sq += weights[i] * gap * gap;
  }
  out.mean_gap = mean_abs;
  out.rms_gap = std::sqrt(mean_sq);
  return out;
}

}  // namespace bbeval
