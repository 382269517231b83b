#include "bbeval/reduction.hpp"

#include <algorithm>
#include <cmath>

namespace bbeval {

PairedAlgorithm pair_algorithms(const AlgorithmHandle& alg0,
                                const AlgorithmHandle& alg1) {
  PairedAlgorithm out;
  out.name = alg0.name + "&" + alg1.name;
  out.fit = [f0 = alg0.fit, f1 = alg1.fit](const Dataset& data, Seed seed) {
    FittedModel m0 = f0(data, seed);
    FittedModel m1 = f1(data, seed);  // same data, same seed
    return PairedModel{
        [m0, m1](int64_t x) { return PairedPrediction{m0(x), m1(x)}; },
        m0.descriptor + "&" + m1.descriptor};
  };
  return out;
}

PairedLossFn::PairedLossFn(const ComparisonFn& psi) : psi_(psi) {}

double PairedLossFn::operator()(const PairedPrediction& pred, int64_t y) const {
  // psi is range-checked against B on evaluation, so this lands in [0, 2B].
  return psi_.bound() - psi_(pred.first, pred.second, y);
}

PairedLossFn comparison_loss(const ComparisonFn& psi) { return PairedLossFn(psi); }

Estimate paired_risk_exact(const PairedAlgorithm& alg, const PairedLossFn& loss,
                           const FiniteDistribution& dist, size_t n,
                           const SeedGrid& grid, uint64_t budget) {
  if (grid.seeds.empty()) throw ConfigError("seed grid must be nonempty");
  double total = 0.0;
  for_each_tuple(dist, n + 1, [&](std::span<const DataPoint> pts, double w) {
    Dataset train(pts.begin(), pts.end() - 1);
    const DataPoint& test = pts.back();
    double over_seeds = 0.0;
    for (const Seed& seed : grid.seeds) {
      PairedModel f = alg.fit(train, seed);
      over_seeds += loss(f(test.x), test.y);
    }
    total += w * over_seeds / static_cast<double>(grid.seeds.size());
  }, budget);
  return Estimate{total, 0.0, 0, true};
}

StabilityEstimate paired_stability_exact(const PairedAlgorithm& alg,
                                         const PairedLossFn& loss,
                                         const FiniteDistribution& dist,
                                         size_t n, double q,
                                         const SeedGrid& grid, uint64_t budget) {
  if (n == 0) throw ConfigError("stability needs n >= 1");
  if (grid.seeds.empty()) throw ConfigError("seed grid must be nonempty");
  auto qpow = [q](double v) {
    double a = std::abs(v);
    if (q == 1.0) return a;
    if (q == 2.0) return a * a;
    return std::pow(a, q);
  };
  std::vector<double> moments(n, 0.0);
  for_each_tuple(dist, n + 1, [&](std::span<const DataPoint> pts, double w) {
    Dataset train(pts.begin(), pts.end() - 1);
    const DataPoint& test = pts.back();
    for (const Seed& seed : grid.seeds) {
      PairedModel full = alg.fit(train, seed);
      double base = loss(full(test.x), test.y);
      const double ws = w / static_cast<double>(grid.seeds.size());
      for (size_t j = 1; j <= n; ++j) {
        Dataset loo;
        loo.reserve(n - 1);
        for (size_t i = 0; i < n; ++i) {
          if (i != j - 1) loo.push_back(train[i]);
        }
        PairedModel dropped = alg.fit(loo, seed);
        moments[j - 1] += ws * qpow(base - loss(dropped(test.x), test.y));
      }
    }
  }, budget);

  StabilityEstimate out;
  out.per_unit.reserve(n);
  for (double mom : moments) {
    double v = mom <= 0.0 ? 0.0
               : q == 1.0 ? mom
               : q == 2.0 ? std::sqrt(mom)
                          : std::pow(mom, 1.0 / q);
    out.per_unit.push_back(Estimate{v, 0.0, 0, true});
  }
  out.argmax = 1;
  for (size_t j = 0; j < out.per_unit.size(); ++j) {
    if (out.per_unit[j].value > out.per_unit[out.argmax - 1].value) {
      out.argmax = j + 1;
    }
  }
  out.overall = out.per_unit[out.argmax - 1];
  return out;
}

double paired_max_risk(const FiniteDistribution& dist, const PairedLossFn& loss,
                       std::vector<double> space) {
  if (space.empty()) space = default_prediction_space(dist);
  // Group the joint mass per feature value, then pick the worst prediction
  // PAIR for each; mirrors the single-model extremal risk.
  double total = 0.0;
  std::vector<int64_t> xs;
  for (const auto& a : dist.atoms()) {
    if (std::find(xs.begin(), xs.end(), a.point.x) == xs.end()) {
      xs.push_back(a.point.x);
    }
  }
  for (int64_t x : xs) {
    double best = -std::numeric_limits<double>::infinity();
    for (double first : space) {
      for (double second : space) {
        double v = 0.0;
        for (const auto& a : dist.atoms()) {
          if (a.point.x != x) continue;
          v += a.p * loss(PairedPrediction{first, second}, a.point.y);
        }
        best = std::max(best, v);
      }
    }
    total += best;
  }
  return total;
}

double ReductionReport::max_gap() const {
  return std::max({risk_identity_gap, extremal_identity_gap,
                   stability_identity_gap});
}

ReductionReport reduction_identity_check(const AlgorithmHandle& alg0,
                                         const AlgorithmHandle& alg1,
                                         const ComparisonFn& psi,
                                         const FiniteDistribution& dist,
                                         size_t n, double q,
                                         const SeedGrid& grid, uint64_t budget) {
  const double B = psi.bound();
  PairedAlgorithm paired = pair_algorithms(alg0, alg1);
  PairedLossFn ploss = comparison_loss(psi);

  ReductionReport r;
  // Route 1: the synthetic evaluation problem, via paired machinery.
  r.paired_risk = paired_risk_exact(paired, ploss, dist, n, grid, budget).value;
  r.paired_extremal = paired_max_risk(dist, ploss);
  r.paired_beta =
      paired_stability_exact(paired, ploss, dist, n, q, grid, budget).overall.value;
  // Route 2: the native comparison quantities.
  r.delta = delta_exact(alg0, alg1, psi, dist, n, grid, budget).value;
  r.delta_max = max_delta(dist, psi).value;
  r.pair_beta =
      pair_stability_exact(alg0, alg1, psi, dist, n, q, grid, budget).overall.value;

  r.risk_identity_gap = std::abs(r.paired_risk - (B - r.delta));
  r.extremal_identity_gap = std::abs(r.paired_extremal - (B + r.delta_max));
  r.stability_identity_gap = std::abs(r.paired_beta - r.pair_beta);
  return r;
}

}  // namespace bbeval
