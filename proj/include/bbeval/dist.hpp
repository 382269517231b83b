#pragma once

#include <string>
#include <vector>

#include "bbeval/core.hpp"
#include "json.hpp"

namespace bbeval {

// ---------------------------------------------------------------------------
// Finite distributions over (x, y) pairs
// ---------------------------------------------------------------------------

struct Atom {
  DataPoint point;
  double p = 0.0;
};

// Finitely supported joint distribution over 64-bit integer pairs. Atoms keep
// their insertion order (sampling and extremal witnesses are deterministic);
// probabilities are strictly positive, sum to 1 within 1e-12, and support
// points are pairwise distinct.
class FiniteDistribution {
 public:
  FiniteDistribution(std::vector<Atom> atoms, std::string name = "dist");

  const std::string& name() const { return name_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  size_t support_size() const { return atoms_.size(); }

  // Probability of an exact point (0 if not an atom).
  double prob_of(const DataPoint& pt) const;
  bool contains(const DataPoint& pt) const { return prob_of(pt) > 0.0; }

  // Inverse-CDF draw.
  DataPoint sample(RngStream& rng) const;
  Dataset sample_dataset(size_t n, RngStream& rng) const;

  nlohmann::json to_json() const;
  static FiniteDistribution from_json(const nlohmann::json& j);

 private:
  std::vector<Atom> atoms_;
  std::vector<double> cdf_;  // inclusive partial sums, last ~ 1
  std::string name_;
};

// ---------------------------------------------------------------------------
// Extremal risk / comparison over a finite prediction space
// ---------------------------------------------------------------------------

// Label support union {0, 1}, ascending, as prediction values.
std::vector<double> default_prediction_space(const FiniteDistribution& dist);

struct ExtremalRisk {
  double value = 0.0;        // sum_x P(x) * max_{yhat} E[loss(yhat, Y) | X=x]
  FittedModel witness;       // attains value exactly (per-x argmax table)
  // For unbounded loss kinds the supremum over ALL prediction functions is
  // +infinity; `value` is then only the best over the given finite space and
  // downstream reports must flag bounds computed from it as conservative.
  bool measurable_sup_infinite = false;
};

struct ExtremalDelta {
  double value = 0.0;        // sum_x P(x) * max_{(a,b)} E[psi(a, b, Y) | X=x]
  FittedModel witness0;      // the DISfavored model (psi's first argument)
  FittedModel witness1;      // the favored model
};

// Exact maximization over a finite prediction space (defaults to
// default_prediction_space). Per-x argmax ties resolve to the first candidate
// in space order, so witnesses are deterministic.
ExtremalRisk max_risk(const FiniteDistribution& dist, const LossFn& loss,
                      std::vector<double> space = {});
ExtremalDelta max_delta(const FiniteDistribution& dist, const ComparisonFn& psi,
                        std::vector<double> space = {});

// ---------------------------------------------------------------------------
// Atom surgery
// ---------------------------------------------------------------------------

// Distribution conditional on NOT drawing `pt`. Identity when pt is not an
// atom; error when pt carries all the mass.
FiniteDistribution conditional_without_atom(const FiniteDistribution& dist,
                                            const DataPoint& pt);

// Mixture (1-c) * base + c * point-mass(pt); requires pt outside base's
// support and c in [0, 1].
FiniteDistribution inject_atom(const FiniteDistribution& base,
                               const DataPoint& pt, double c);

// ---------------------------------------------------------------------------
// Couplings
// ---------------------------------------------------------------------------

// Total variation distance: half the sum of |p - q| over the union support.
double total_variation(const FiniteDistribution& p, const FiniteDistribution& q);

struct CoupledDraw {
  DataPoint a;  // marginally distributed as p
  DataPoint b;  // marginally distributed as q
  bool equal = false;
};

// One draw from a maximal coupling of (p, q): marginals are exact and
// P(a == b) = 1 - total_variation(p, q), the largest possible.
CoupledDraw maximal_coupling_sample(const FiniteDistribution& p,
                                    const FiniteDistribution& q, RngStream& rng);

}  // namespace bbeval
