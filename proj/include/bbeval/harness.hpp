#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bbeval/core.hpp"
#include "bbeval/dist.hpp"
#include "json.hpp"

namespace bbeval {

// ---------------------------------------------------------------------------
// Staged black-box test protocols
// ---------------------------------------------------------------------------
//
// A protocol interacts with a learning algorithm only through fit calls: each
// stage it either asks the harness to fit on a chosen (dataset, seed) or
// announces a decision in {0, 1}. The protocol sees the input data, every
// prior query, the resulting models AS PREDICTION FUNCTIONS, and fresh
// randomness for the current stage - never the algorithm handle itself, so
// opacity holds by construction.

struct Query {
  Dataset dataset;
  Seed seed;
};

struct Decide {
  int decision = 0;  // 1 = reject / certify, 0 = accept
};

using ProtocolStep = std::variant<Query, Decide>;

struct ProtocolContext {
  const Dataset& input;                  // the N labeled points under test
  std::span<const Query> queries;        // prior stages' (dataset, seed)
  std::span<const FittedModel> models;   // fits from the (first) algorithm
  std::span<const FittedModel> models1;  // second algorithm (comparison runs
                                         // only; empty otherwise)
  RngStream& rng;                        // this stage's private randomness
};

struct TestProtocol {
  std::string name;
  std::function<ProtocolStep(const ProtocolContext&)> next;
  uint64_t max_rounds = 10000;  // fit-query budget; exceeding it is an error
};

// ---------------------------------------------------------------------------
// Transcripts
// ---------------------------------------------------------------------------

struct TranscriptRound {
  Dataset dataset;
  Seed seed;
  std::string model;   // descriptor of the fitted model
  std::string model1;  // second algorithm's model (comparison runs)
};

struct Transcript {
  std::vector<TranscriptRound> rounds;
  Dataset input;
  int decision = 0;
  uint64_t master_key = 0;  // replaying with this key reproduces everything

  // Compact audit form: one shared point table, datasets as index lists.
  nlohmann::json to_json() const;
  std::string serialize() const;  // canonical string (replay compares these)
};

struct RunResult {
  int decision = 0;
  Transcript transcript;
  std::vector<FittedModel> models;   // kept alive for post-hoc inspection
  std::vector<FittedModel> models1;  // comparison runs
};

// Drive one protocol run against an algorithm. Stage r consumes the
// substream (rng, r), so identical keys replay identical transcripts.
RunResult run_test(const TestProtocol& protocol, const AlgorithmHandle& alg,
                   const Dataset& input, RngStream rng);

// Comparison variant: each query fits BOTH algorithms on the same dataset
// with the same seed.
RunResult run_compare_test(const TestProtocol& protocol,
                           const AlgorithmHandle& alg0,
                           const AlgorithmHandle& alg1, const Dataset& input,
                           RngStream rng);

// ---------------------------------------------------------------------------
// Appearance probability and rare points
// ---------------------------------------------------------------------------

struct AppearanceEstimate {
  double estimate = 0.0;     // hit fraction
  double lo = 0.0, hi = 1.0; // exact 95% binomial confidence interval
  uint64_t hits = 0;
  uint64_t trials = 0;
};

// Probability that `pt` shows up anywhere a run can see it: in the sampled
// input data or in any queried dataset. Trial t draws its data from
// substream (rng, t) and runs the protocol on it. Pass alg1 to exercise a
// comparison protocol (runs under run_compare_test).
AppearanceEstimate appearance_probability(const TestProtocol& protocol,
                                          const AlgorithmHandle& alg,
                                          const FiniteDistribution& dist,
                                          size_t N, const DataPoint& pt,
                                          uint64_t trials, RngStream rng,
                                          const AlgorithmHandle* alg1 = nullptr);

// Find a point whose appearance probability is certifiably below epsilon:
// fresh candidates are drawn from the integer universe (outside the support),
// and the first one whose exact 95% upper confidence limit clears epsilon is
// returned. Throws VerificationError if `attempts` candidates all fail.
struct RarePoint {
  DataPoint point;
  AppearanceEstimate appearance;
};

RarePoint find_rare_point(const TestProtocol& protocol,
                          const AlgorithmHandle& alg,
                          const FiniteDistribution& dist, size_t N,
                          double epsilon, uint64_t trials, RngStream rng,
                          int attempts = 16,
                          const AlgorithmHandle* alg1 = nullptr);

// Empirical census of "frequent" points: estimate appearance probability for
// every point in the support plus everything observed across `trials` runs,
// and count how many reach delta. Finiteness is witnessed by the counting
// bound (N + max points queried in any run) / (delta / 2), which the count
// can never exceed when the estimates are honest.
struct AppearanceCensus {
  uint64_t candidates = 0;       // distinct points scanned
  uint64_t frequent = 0;         // estimated appearance prob >= delta
  double counting_bound = 0.0;   // (N + max queried per run) / (delta/2)
  uint64_t max_queried = 0;      // largest total queried dataset size seen
};

AppearanceCensus appearance_census(const TestProtocol& protocol,
                                   const AlgorithmHandle& alg,
                                   const FiniteDistribution& dist, size_t N,
                                   double delta, uint64_t trials, RngStream rng);

}  // namespace bbeval
