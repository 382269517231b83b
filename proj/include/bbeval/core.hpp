#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bbeval/errors.hpp"
#include "bbeval/rng.hpp"

namespace bbeval {

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

// One labeled observation. Features and labels are 64-bit integers; regression
// algorithms may still emit real-valued predictions.
struct DataPoint {
  int64_t x = 0;
  int64_t y = 0;
  friend bool operator==(const DataPoint&, const DataPoint&) = default;
};

struct DataPointHash {
  size_t operator()(const DataPoint& p) const {
    uint64_t h = static_cast<uint64_t>(p.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<uint64_t>(p.y) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    return static_cast<size_t>(h);
  }
};

// Ordered list of observations; duplicates allowed, order is meaningful
// (batching and fold logic index into it).
using Dataset = std::vector<DataPoint>;

// ---------------------------------------------------------------------------
// Seeds
// ---------------------------------------------------------------------------

// External randomness handed to a fit call. Conceptually a uniform draw on
// [0,1]; materialized from 64 bits so it serializes exactly.
struct Seed {
  uint64_t bits = 0;

  double value() const { return RngStream::to_unit(bits); }

  static Seed from_bits(uint64_t u) { return Seed{u}; }

  // Nearest representable seed for a requested real value in [0,1].
  static Seed from_value(double v);

  static Seed draw(RngStream& rng) { return Seed{rng.next_u64()}; }

  friend bool operator==(const Seed&, const Seed&) = default;
};

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

// Nonnegative loss ell(yhat, y). Builtin kinds know their own range; custom
// losses declare a bound (use +infinity for unbounded) and are range-checked
// on every evaluation.
class LossFn {
 public:
  enum class Kind { ZeroOne, Thresholded, Squared, Absolute, Custom };

  static LossFn zero_one();
  // 1 if |yhat - y| > radius, else 0.
  static LossFn thresholded(double radius);
  static LossFn squared();
  static LossFn absolute();
  static LossFn custom(std::string name, double bound,
                       std::function<double(double, int64_t)> fn);

  double operator()(double yhat, int64_t y) const;

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  // Declared upper bound B; +infinity for squared/absolute.
  double bound() const { return bound_; }
  bool bounded() const { return bound_ < std::numeric_limits<double>::infinity(); }
  // True when every value is 0 or 1 (what the Binomial test protocol needs).
  bool binary() const { return kind_ == Kind::ZeroOne || kind_ == Kind::Thresholded; }

 private:
  LossFn(Kind k, std::string name, double bound,
         std::function<double(double, int64_t)> fn, double radius = 0.0)
      : kind_(k), name_(std::move(name)), bound_(bound),
        fn_(std::move(fn)), radius_(radius) {}

  Kind kind_;
  std::string name_;
  double bound_;
  std::function<double(double, int64_t)> fn_;  // only set for Custom
  double radius_;
};

// ---------------------------------------------------------------------------
// Comparisons
// ---------------------------------------------------------------------------

// Bounded antisymmetric score psi(yhat0, yhat1, y) in [-B, B]; positive sign
// means yhat1 is the better prediction. Antisymmetry means
// psi(a, b, y) = -psi(b, a, y) for all a, b, y (hence psi(a, a, y) = 0).
class ComparisonFn {
 public:
  enum class Kind { LossDifference, LossOrderIndicator, Custom };

  // ell(yhat0, y) - ell(yhat1, y); requires a bounded loss, B = loss bound.
  static ComparisonFn loss_difference(const LossFn& loss);
  // sign(ell(yhat0, y) - ell(yhat1, y)) in {-1, 0, +1}; any loss, B = 1.
  static ComparisonFn loss_order_indicator(const LossFn& loss);
  static ComparisonFn custom(std::string name, double bound,
                             std::function<double(double, double, int64_t)> fn);

  double operator()(double yhat0, double yhat1, int64_t y) const;

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double bound() const { return bound_; }

 private:
  ComparisonFn(Kind k, std::string name, double bound,
               std::function<double(double, double, int64_t)> fn)
      : kind_(k), name_(std::move(name)), bound_(bound), fn_(std::move(fn)) {}

  Kind kind_;
  std::string name_;
  double bound_;
  std::function<double(double, double, int64_t)> fn_;
};

// ---------------------------------------------------------------------------
// Models and algorithms
// ---------------------------------------------------------------------------

// A fitted model: a deterministic prediction function plus a short
// human-readable descriptor (used in transcripts and audits).
struct FittedModel {
  std::function<double(int64_t)> predict;
  std::string descriptor;

  double operator()(int64_t x) const { return predict(x); }
};

// A learning algorithm handle: fit(data, seed) -> model. All randomness must
// come from the seed argument, so refitting with the same (data, seed) yields
// a model with identical predictions; handles must be safe to call from
// several threads at once.
struct AlgorithmHandle {
  std::string name;
  std::function<FittedModel(const Dataset&, Seed)> fit;
};

// --- builtin zoo -----------------------------------------------------------

// Always predicts c.
AlgorithmHandle constant_predictor(double c);
// Predicts the most frequent label (ties -> smallest label); empty fit -> 0.
AlgorithmHandle majority_vote();
// k-nearest-neighbor vote on |x - query|. Equidistant neighbors are ranked by
// smaller feature value; vote ties resolve toward the smaller label. Empty fit
// falls back to the constant-0 model; 0 < |data| < k is a contract error.
AlgorithmHandle knn(int k);
// Predicts the mean label (as a real); empty fit -> 0.
AlgorithmHandle empirical_mean();
// Ignores the data; predicts 0 if seed.value() < threshold else 1.
AlgorithmHandle seed_coin(double threshold = 0.5);

// Default-parameterized instances of each builtin, for scans.
std::vector<AlgorithmHandle> builtin_algorithms();

// --- contract probes -------------------------------------------------------

// Refit with the same (data, seed) and compare predictions on random probe
// queries; throws ContractError on any mismatch.
void check_fit_deterministic(const AlgorithmHandle& alg, const Dataset& data,
                             Seed seed, int probes, RngStream rng);

// Random probes of psi(a, b, y) + psi(b, a, y) == 0 and |psi| <= bound;
// throws ContractError on violation.
void check_antisymmetry(const ComparisonFn& psi, int probes, RngStream rng);

// Random probes of 0 <= loss <= bound (when bounded); throws ContractError.
void check_loss_range(const LossFn& loss, int probes, RngStream rng);

}  // namespace bbeval
