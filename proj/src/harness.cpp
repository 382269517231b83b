#include "bbeval/harness.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "bbeval/binomial.hpp"

namespace bbeval {

// ---------------------------------------------------------------------------
// Transcript serialization
// ---------------------------------------------------------------------------

nlohmann::json Transcript::to_json() const {
  // Shared point table; datasets become index lists into it.
  std::vector<DataPoint> table;
  std::unordered_map<DataPoint, size_t, DataPointHash> where;
  auto index_of = [&](const DataPoint& pt) {
    auto it = where.find(pt);
    if (it != where.end()) return it->second;
    where.emplace(pt, table.size());
    table.push_back(pt);
    return table.size() - 1;
  };
  auto as_indices = [&](const Dataset& d) {
    std::vector<size_t> idx;
    idx.reserve(d.size());
    for (const auto& pt : d) idx.push_back(index_of(pt));
    return idx;
  };

  nlohmann::json jrounds = nlohmann::json::array();
  std::vector<size_t> input_idx = as_indices(input);
  for (const auto& r : rounds) {
    nlohmann::json jr{{"dataset", as_indices(r.dataset)},
                      {"seed_bits", r.seed.bits},
                      {"model", r.model}};
    if (!r.model1.empty()) jr["model1"] = r.model1;
    jrounds.push_back(std::move(jr));
  }
  nlohmann::json jtable = nlohmann::json::array();
  for (const auto& pt : table) jtable.push_back({pt.x, pt.y});
  return nlohmann::json{{"points", jtable},
                        {"input", input_idx},
                        {"rounds", jrounds},
                        {"decision", decision},
                        {"master_key", master_key}};
}

std::string Transcript::serialize() const { return to_json().dump(); }

// ---------------------------------------------------------------------------
// Protocol loop
// ---------------------------------------------------------------------------

namespace {

RunResult run_loop(const TestProtocol& protocol, const AlgorithmHandle* alg0,
                   const AlgorithmHandle* alg1, const Dataset& input,
                   RngStream rng) {
  if (!protocol.next) throw ConfigError("protocol has no step function");
  RunResult out;
  out.transcript.input = input;
  out.transcript.master_key = rng.key();
  std::vector<Query> queries;

  for (uint64_t stage = 0;; ++stage) {
    RngStream stage_rng = rng.substream(stage);
    ProtocolContext ctx{input,
                        {queries.data(), queries.size()},
                        {out.models.data(), out.models.size()},
                        {out.models1.data(), out.models1.size()},
                        stage_rng};
    ProtocolStep step = protocol.next(ctx);
    if (std::holds_alternative<Decide>(step)) {
      int d = std::get<Decide>(step).decision;
      if (d != 0 && d != 1) {
        throw ContractError("protocol '" + protocol.name +
                            "' decided " + std::to_string(d) + ", want 0 or 1");
      }
      out.decision = d;
      out.transcript.decision = d;
      return out;
    }
    if (queries.size() >= protocol.max_rounds) {
      throw BudgetError("protocol '" + protocol.name + "' exceeded its budget of " +
                        std::to_string(protocol.max_rounds) + " fit queries");
    }
    Query q = std::get<Query>(std::move(step));
    FittedModel m0 = alg0->fit(q.dataset, q.seed);
    TranscriptRound round{q.dataset, q.seed, m0.descriptor, ""};
    out.models.push_back(std::move(m0));
    if (alg1 != nullptr) {
      FittedModel m1 = alg1->fit(q.dataset, q.seed);  // same data, same seed
      round.model1 = m1.descriptor;
      out.models1.push_back(std::move(m1));
    }
    out.transcript.rounds.push_back(std::move(round));
    queries.push_back(std::move(q));
  }
}

}  // namespace

RunResult run_test(const TestProtocol& protocol, const AlgorithmHandle& alg,
                   const Dataset& input, RngStream rng) {
  return run_loop(protocol, &alg, nullptr, input, rng);
}

RunResult run_compare_test(const TestProtocol& protocol,
                           const AlgorithmHandle& alg0,
                           const AlgorithmHandle& alg1, const Dataset& input,
                           RngStream rng) {
  return run_loop(protocol, &alg0, &alg1, input, rng);
}

// ---------------------------------------------------------------------------
// Appearance probability and rare points
// ---------------------------------------------------------------------------

namespace {

// Substream layout shared by the appearance estimators: trial t samples its
// input from (rng, 2t) and runs the protocol with (rng, 2t + 1).
struct TrialStreams {
  RngStream data;
  RngStream run;
};

TrialStreams trial_streams(const RngStream& rng, uint64_t t) {
  return {rng.substream(2 * t), rng.substream(2 * t + 1)};
}

}  // namespace

AppearanceEstimate appearance_probability(const TestProtocol& protocol,
                                          const AlgorithmHandle& alg,
                                          const FiniteDistribution& dist,
                                          size_t N, const DataPoint& pt,
                                          uint64_t trials, RngStream rng,
                                          const AlgorithmHandle* alg1) {
  if (trials == 0) throw ConfigError("appearance_probability needs trials >= 1");
  uint64_t hits = 0;
  for (uint64_t t = 0; t < trials; ++t) {
    auto [data_rng, run_rng] = trial_streams(rng, t);
    Dataset input = dist.sample_dataset(N, data_rng);
    RunResult run = alg1 == nullptr
                        ? run_test(protocol, alg, input, run_rng)
                        : run_compare_test(protocol, alg, *alg1, input, run_rng);
    bool seen = std::find(input.begin(), input.end(), pt) != input.end();
    for (auto it = run.transcript.rounds.begin();
         !seen && it != run.transcript.rounds.end(); ++it) {
      seen = std::find(it->dataset.begin(), it->dataset.end(), pt) !=
             it->dataset.end();
    }
    hits += seen ? 1 : 0;
  }
  ExactInterval ci = clopper_pearson(hits, trials, 0.95);
  return AppearanceEstimate{static_cast<double>(hits) / static_cast<double>(trials),
                            ci.lo, ci.hi, hits, trials};
}

RarePoint find_rare_point(const TestProtocol& protocol,
                          const AlgorithmHandle& alg,
                          const FiniteDistribution& dist, size_t N,
                          double epsilon, uint64_t trials, RngStream rng,
                          int attempts, const AlgorithmHandle* alg1) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  RngStream candidate_rng = rng.substream(0);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    // Candidates live in the 50-bit corner of the integer universe: fresh
    // with overwhelming margin, and exactly representable as doubles so
    // prediction/label comparisons stay lossless.
    DataPoint cand{static_cast<int64_t>(candidate_rng.next_u64() >> 14),
                   static_cast<int64_t>(candidate_rng.next_u64() >> 14)};
    if (dist.contains(cand)) continue;
    AppearanceEstimate est = appearance_probability(
        protocol, alg, dist, N, cand, trials, rng.substream(attempt + 1), alg1);
    if (est.hi < epsilon) return RarePoint{cand, est};
  }
  throw VerificationError(
      "no point with appearance probability certifiably below " +
      std::to_string(epsilon) + " after " + std::to_string(attempts) +
      " candidates; raise trials or epsilon");
}

AppearanceCensus appearance_census(const TestProtocol& protocol,
                                   const AlgorithmHandle& alg,
                                   const FiniteDistribution& dist, size_t N,
                                   double delta, uint64_t trials, RngStream rng) {
  if (!(delta > 0.0)) throw ConfigError("delta must be > 0");
  if (trials == 0) throw ConfigError("appearance_census needs trials >= 1");
  std::unordered_map<DataPoint, uint64_t, DataPointHash> counts;
  uint64_t max_queried = 0;
  for (uint64_t t = 0; t < trials; ++t) {
    auto [data_rng, run_rng] = trial_streams(rng, t);
    Dataset input = dist.sample_dataset(N, data_rng);
    RunResult run = run_test(protocol, alg, input, run_rng);
    std::unordered_set<DataPoint, DataPointHash> seen(input.begin(), input.end());
    uint64_t queried = 0;
    for (const auto& r : run.transcript.rounds) {
      queried += r.dataset.size();
      seen.insert(r.dataset.begin(), r.dataset.end());
    }
    if (queried > max_queried) max_queried = queried;
    for (const auto& pt : seen) ++counts[pt];
  }
  // Support points are candidates even if never observed.
  for (const auto& a : dist.atoms()) counts.emplace(a.point, 0);

  AppearanceCensus out;
  out.candidates = counts.size();
  out.max_queried = max_queried;
  out.counting_bound =
      (static_cast<double>(N) + static_cast<double>(max_queried)) / (delta / 2.0);
  for (const auto& [pt, c] : counts) {
    double freq = static_cast<double>(c) / static_cast<double>(trials);
    if (freq >= delta) ++out.frequent;
  }
  return out;
}

}  // namespace bbeval
