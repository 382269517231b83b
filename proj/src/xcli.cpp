#include "bbeval/xcli.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "bbeval/adversary.hpp"
#include "bbeval/binomial.hpp"
#include "bbeval/bounds.hpp"
#include "bbeval/btest.hpp"
#include "bbeval/errors.hpp"
#include "bbeval/estimate.hpp"
#include "bbeval/harness.hpp"
#include "bbeval/parallel.hpp"
#include "bbeval/reduction.hpp"

namespace bbeval {

using nlohmann::json;

namespace {

// %.12g keeps doubles round-trippable enough for diffing while staying
// locale-independent and byte-stable (the determinism tests diff raw output).
std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string cell(double v) { return fmt_num(v); }
std::string cell(uint64_t v) { return std::to_string(v); }

// --- config param access ----------------------------------------------------

const json* find_param(const json& p, const std::string& key) {
  if (!p.is_object()) return nullptr;
  auto it = p.find(key);
  return it == p.end() ? nullptr : &*it;
}

double as_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("params." + key + ": expected a number");
  return j.get<double>();
}

double param_num(const json& p, const std::string& key, double def) {
  const json* j = find_param(p, key);
  return j ? as_number(*j, key) : def;
}

uint64_t param_u64(const json& p, const std::string& key, uint64_t def) {
  const json* j = find_param(p, key);
  if (!j) return def;
  if (!j->is_number_integer() && !j->is_number_unsigned())
    throw ConfigError("params." + key + ": expected an integer");
  if (j->is_number_integer() && j->get<int64_t>() < 0)
    throw ConfigError("params." + key + ": must be nonnegative");
  return j->get<uint64_t>();
}

bool param_bool(const json& p, const std::string& key, bool def) {
  const json* j = find_param(p, key);
  if (!j) return def;
  if (!j->is_boolean()) throw ConfigError("params." + key + ": expected a bool");
  return j->get<bool>();
}

std::string param_str(const json& p, const std::string& key,
                      const std::string& def) {
  const json* j = find_param(p, key);
  if (!j) return def;
  if (!j->is_string()) throw ConfigError("params." + key + ": expected a string");
  return j->get<std::string>();
}

// Scalar-or-array number list.
std::vector<double> param_nums(const json& p, const std::string& key,
                               std::vector<double> def) {
  const json* j = find_param(p, key);
  if (!j) return def;
  std::vector<double> out;
  if (j->is_array()) {
    for (const auto& e : *j) out.push_back(as_number(e, key));
  } else {
    out.push_back(as_number(*j, key));
  }
  if (out.empty()) throw ConfigError("params." + key + ": empty list");
  return out;
}

std::vector<uint64_t> param_u64s(const json& p, const std::string& key,
                                 std::vector<uint64_t> def) {
  const json* j = find_param(p, key);
  if (!j) return def;
  std::vector<uint64_t> out;
  auto one = [&](const json& e) {
    if (!e.is_number_integer() && !e.is_number_unsigned())
      throw ConfigError("params." + key + ": expected integer(s)");
    if (e.is_number_integer() && e.get<int64_t>() < 0)
      throw ConfigError("params." + key + ": must be nonnegative");
    out.push_back(e.get<uint64_t>());
  };
  if (j->is_array()) {
    for (const auto& e : *j) one(e);
  } else {
    one(*j);
  }
  if (out.empty()) throw ConfigError("params." + key + ": empty list");
  return out;
}

// --- CSV plumbing -----------------------------------------------------------

// Every table row ends with the master seed and the config hash so a stray
// CSV file still identifies exactly which run wrote it.
struct CsvSink {
  std::ostream& out;
  std::string suffix;  // ",<seed>,<hash>"

  CsvSink(std::ostream& o, const std::vector<std::string>& cols,
          const ExperimentConfig& cfg)
      : out(o), suffix("," + std::to_string(cfg.master_seed) + "," + cfg.hash()) {
    std::string head;
    for (const auto& c : cols) {
      if (!head.empty()) head += ',';
      head += c;
    }
    out << head << ",master_seed,config_hash\n";
  }

  void row(const std::vector<std::string>& cells) {
    std::string line;
    for (const auto& c : cells) {
      if (!line.empty()) line += ',';
      line += c;
    }
    out << line << suffix << "\n";
  }
};

// --- shared experiment pieces -----------------------------------------------

// Mistake distribution for the power experiments: the constant-0 predictor's
// zero-one loss on a draw from this is exactly Bernoulli(R).
FiniteDistribution bernoulli_mistake(double R) {
  if (!(R >= 0.0 && R <= 1.0))
    throw ConfigError("R must lie in [0,1], got " + fmt_num(R));
  std::vector<Atom> atoms;
  if (R < 1.0) atoms.push_back({{0, 0}, 1.0 - R});
  if (R > 0.0) atoms.push_back({{0, 1}, R});
  return FiniteDistribution(std::move(atoms), "bernoulli(" + fmt_num(R) + ")");
}

FiniteDistribution skewed_two_atom() {
  return FiniteDistribution({{{0, 0}, 0.9}, {{1, 1}, 0.1}}, "skewed-two-atom");
}

struct McRate {
  double rate = 0.0;
  double se = 0.0;
};

// Rejection rate of one protocol run per trial; trial t draws its data from
// substream (row, 2t) and its protocol randomness from (row, 2t+1).
McRate mc_protocol_rate(const TestProtocol& proto, const AlgorithmHandle& alg,
                        const AlgorithmHandle* alg1,
                        const FiniteDistribution& dist, size_t N,
                        uint64_t trials, int workers, RngStream row_rng) {
  McMoments mom = mc_run(trials, 1, workers, [&](uint64_t t, double* out) {
    RngStream trial = row_rng.substream(t);
    RngStream data_rng = trial.substream(0);
    RngStream run_rng = trial.substream(1);
    Dataset data = dist.sample_dataset(N, data_rng);
    RunResult res = alg1 ? run_compare_test(proto, alg, *alg1, data, run_rng)
                         : run_test(proto, alg, data, run_rng);
    out[0] = static_cast<double>(res.decision);
  });
  return {mom.mean(0), mom.stderr_of_mean(0)};
}

// Exact-enumeration feasibility for stability scans: the tuple walk costs
// roughly tuples * seeds * (n+2) fit calls; past the cap, Monte Carlo wins.
bool stability_exact_feasible(const FiniteDistribution& dist, size_t n,
                              size_t grid_size, uint64_t work_cap = 2'000'000) {
  uint64_t tuples = tuple_count(dist.support_size(), n + 1);
  if (tuples > kEnumBudget) return false;
  long double work = static_cast<long double>(tuples) *
                     static_cast<long double>(grid_size) *
                     static_cast<long double>(n + 2);
  return work <= static_cast<long double>(work_cap);
}

std::string regime_name(Regime r) {
  return r == Regime::PowerLimited ? "power-limited" : "estimable";
}

SeedGrid grid_from_params(const json& p) {
  uint64_t m = param_u64(p, "seed_grid", 8);
  if (m <= 1) return SeedGrid::single();
  return SeedGrid::equispaced(static_cast<int>(m));
}

}  // namespace

// ---------------------------------------------------------------------------
// ExperimentConfig
// ---------------------------------------------------------------------------

json ExperimentConfig::to_json() const {
  return json{{"kind", kind},
              {"master_seed", master_seed},
              {"trials", trials},
              {"workers", workers},
              {"params", params}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::unordered_set<std::string> allowed{
      "kind", "master_seed", "trials", "workers", "params"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + it.key() + "'");
  }
  ExperimentConfig cfg;
  if (!j.contains("kind") || !j["kind"].is_string())
    throw ConfigError("config: 'kind' (string) is required");
  cfg.kind = j["kind"].get<std::string>();
  if (j.contains("master_seed")) {
    if (!j["master_seed"].is_number_integer() && !j["master_seed"].is_number_unsigned())
      throw ConfigError("config: 'master_seed' must be an integer");
    cfg.master_seed = j["master_seed"].get<uint64_t>();
  }
  if (j.contains("trials")) {
    if (!j["trials"].is_number_integer() && !j["trials"].is_number_unsigned())
      throw ConfigError("config: 'trials' must be an integer");
    cfg.trials = j["trials"].get<uint64_t>();
  }
  if (j.contains("workers")) {
    if (!j["workers"].is_number_integer())
      throw ConfigError("config: 'workers' must be an integer");
    cfg.workers = j["workers"].get<int>();
  }
  if (j.contains("params")) {
    if (!j["params"].is_object())
      throw ConfigError("config: 'params' must be an object");
    cfg.params = j["params"];
  }
  return cfg;
}

std::string ExperimentConfig::hash() const {
  // FNV-1a over the canonical dump. `workers` is excluded: it is an execution
  // knob that must not change any output byte, so two runs that differ only in
  // worker count are the same experiment and must carry the same hash.
  json j = to_json();
  j.erase("workers");
  const std::string dump = j.dump();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char b : dump) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Name-based lookups
// ---------------------------------------------------------------------------

namespace {

// "prefix(<arg>)" -> arg, if name has that shape.
std::optional<std::string> call_arg(const std::string& name,
                                    const std::string& prefix) {
  if (name.size() > prefix.size() + 2 && name.compare(0, prefix.size() + 1, prefix + "(") == 0 &&
      name.back() == ')') {
    return name.substr(prefix.size() + 1, name.size() - prefix.size() - 2);
  }
  return std::nullopt;
}

double parse_real(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("could not parse number '" + s + "' in " + what);
  }
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("could not parse integer '" + s + "' in " + what);
  }
}

}  // namespace

AlgorithmHandle algorithm_by_name(const std::string& name) {
  if (auto arg = call_arg(name, "constant"))
    return constant_predictor(parse_real(*arg, name));
  if (name == "majority-vote") return majority_vote();
  if (auto arg = call_arg(name, "knn")) return knn(parse_int(*arg, name));
  if (name.size() > 3 && name.compare(name.size() - 3, 3, "-nn") == 0)
    return knn(parse_int(name.substr(0, name.size() - 3), name));
  if (name == "empirical-mean") return empirical_mean();
  if (name == "seed-coin") return seed_coin();
  if (auto arg = call_arg(name, "seed-coin"))
    return seed_coin(parse_real(*arg, name));
  throw ConfigError("unknown algorithm '" + name +
                    "' (try constant(<c>), majority-vote, <k>-nn, "
                    "empirical-mean, seed-coin(<t>))");
}

LossFn loss_by_name(const std::string& name) {
  if (name == "zero-one") return LossFn::zero_one();
  if (name == "squared") return LossFn::squared();
  if (name == "absolute") return LossFn::absolute();
  if (auto arg = call_arg(name, "thresholded"))
    return LossFn::thresholded(parse_real(*arg, name));
  throw ConfigError("unknown loss '" + name +
                    "' (try zero-one, thresholded(<r>), squared, absolute)");
}

ComparisonFn comparison_by_name(const std::string& name) {
  if (auto arg = call_arg(name, "loss-difference"))
    return ComparisonFn::loss_difference(loss_by_name(*arg));
  if (auto arg = call_arg(name, "loss-order"))
    return ComparisonFn::loss_order_indicator(loss_by_name(*arg));
  throw ConfigError("unknown comparison '" + name +
                    "' (try loss-difference(<loss>), loss-order(<loss>))");
}

FiniteDistribution dist_from_params(const json& params, const std::string& key) {
  if (const json* j = find_param(params, key))
    return FiniteDistribution::from_json(*j);
  return FiniteDistribution({{{0, 0}, 0.75}, {{1, 1}, 0.25}}, "two-atom");
}

// ---------------------------------------------------------------------------
// power
// ---------------------------------------------------------------------------

void cmd_power(const ExperimentConfig& cfg, std::ostream& out) {
  const json& p = cfg.params;
  auto ms = param_u64s(p, "m", {1, 3, 5});
  auto taus = param_nums(p, "tau", {0.5});
  auto alphas = param_nums(p, "alpha", {0.05});
  auto Rs = param_nums(p, "R", {0.0, 0.1, 0.25, 0.4});
  size_t n = param_u64(p, "n", 1);
  double risk_max = param_num(p, "risk_max", 1.0);
  bool mc = param_bool(p, "mc", true) && cfg.trials > 0;

  CsvSink csv(out,
              {"m", "tau", "alpha", "n", "N", "R", "exact_power", "closed_form",
               "mc_power", "mc_stderr", "power_bound"},
              cfg);
  RngStream master(cfg.master_seed);
  uint64_t row = 0;
  for (uint64_t m : ms) {
    for (double tau : taus) {
      for (double alpha : alphas) {
        TestProtocol proto =
            binom_test_protocol({n, tau, alpha, LossFn::zero_one()});
        const uint64_t N = m * (n + 1);
        for (double R : Rs) {
          double exact = binom_test_exact_power(m, tau, alpha, R);
          std::string closed = binom_closed_form_valid(m, tau, alpha)
                                   ? cell(binom_test_closed_form_power(m, tau, alpha, R))
                                   : "";
          std::string mc_rate, mc_se;
          if (mc) {
            FiniteDistribution dist = bernoulli_mistake(R);
            McRate est = mc_protocol_rate(proto, constant_predictor(0.0),
                                          nullptr, dist, N, cfg.trials,
                                          cfg.workers, master.substream(row));
            mc_rate = cell(est.rate);
            mc_se = cell(est.se);
          }
          EvalBoundInputs in{alpha, tau, N, n, R, risk_max};
          std::string bound;
          if (eval_bound_in_domain(in) && R <= inflated_threshold(tau, alpha, N))
            bound = cell(eval_power_bound(in));
          csv.row({cell(m), cell(tau), cell(alpha), cell(n), cell(N), cell(R),
                   cell(exact), closed, mc_rate, mc_se, bound});
          ++row;
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// critical
// ---------------------------------------------------------------------------

void cmd_critical(const ExperimentConfig& cfg, std::ostream& out) {
  const json& p = cfg.params;
  auto ms = param_u64s(p, "m", {1, 2, 3, 4, 5});
  auto taus = param_nums(p, "tau", {0.5});
  auto alphas = param_nums(p, "alpha", {0.05});
  auto Rs = param_nums(p, "R", {});  // empty -> R = tau per combination

  CsvSink csv(out, {"m", "tau", "alpha", "k_star", "a_star", "R", "power"}, cfg);
  for (uint64_t m : ms) {
    for (double tau : taus) {
      for (double alpha : alphas) {
        CriticalValue cv = binomial_critical(m, tau, alpha);
        std::vector<double> rs = Rs.empty() ? std::vector<double>{tau} : Rs;
        for (double R : rs) {
          csv.row({cell(m), cell(tau), cell(alpha), cell(cv.k_star),
                   cell(cv.a_star), cell(R),
                   cell(randomized_lower_power(m, cv, R))});
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

void cmd_validate(const ExperimentConfig& cfg, std::ostream& out) {
  const json& p = cfg.params;
  std::vector<uint64_t> default_ms;
  for (uint64_t m = 1; m <= 20; ++m) default_ms.push_back(m);
  auto ms = param_u64s(p, "m", default_ms);
  auto taus = param_nums(p, "tau", {0.3, 0.5, 0.7});
  auto alphas = param_nums(p, "alpha", {0.01, 0.05, 0.1});
  size_t n = param_u64(p, "n", 1);
  bool mc = param_bool(p, "mc", false) && cfg.trials > 0;

  CsvSink csv(out,
              {"m", "tau", "alpha", "k_star", "a_star", "exact_size",
               "size_dev", "mc_size", "mc_stderr"},
              cfg);
  RngStream master(cfg.master_seed);
  uint64_t row = 0;
  for (uint64_t m : ms) {
    for (double tau : taus) {
      for (double alpha : alphas) {
        CriticalValue cv = binomial_critical(m, tau, alpha);
        double size = randomized_lower_power(m, cv, tau);
        std::string mc_size, mc_se;
        if (mc) {
          TestProtocol proto =
              binom_test_protocol({n, tau, alpha, LossFn::zero_one()});
          FiniteDistribution dist = bernoulli_mistake(tau);
          McRate est = mc_protocol_rate(proto, constant_predictor(0.0), nullptr,
                                        dist, m * (n + 1), cfg.trials,
                                        cfg.workers, master.substream(row));
          mc_size = cell(est.rate);
          mc_se = cell(est.se);
        }
        csv.row({cell(m), cell(tau), cell(alpha), cell(cv.k_star),
                 cell(cv.a_star), cell(size), cell(size - alpha), mc_size,
                 mc_se});
        ++row;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// bound
// ---------------------------------------------------------------------------

void cmd_bound(const ExperimentConfig& cfg, std::ostream& out) {
  const json& p = cfg.params;
  std::string family = param_str(p, "family", "both");
  if (family != "eval" && family != "compare" && family != "both")
    throw ConfigError("params.family must be eval, compare, or both");
  auto alphas = param_nums(p, "alpha", {0.05});
  auto Ns = param_u64s(p, "N", {100});
  auto ns = param_u64s(p, "n", {10});

  CsvSink csv(out,
              {"family", "alpha", "tau", "B", "N", "n", "risk", "delta",
               "risk_max", "delta_max", "in_domain", "bound"},
              cfg);
  if (family != "compare") {
    auto taus = param_nums(p, "tau", {0.5});
    auto risks = param_nums(p, "risk", {0.0, 0.1, 0.25});
    auto risk_maxs = param_nums(p, "risk_max", {1.0});
    for (double alpha : alphas)
      for (double tau : taus)
        for (uint64_t N : Ns)
          for (uint64_t n : ns)
            for (double rmax : risk_maxs)
              for (double risk : risks) {
                EvalBoundInputs in{alpha, tau, N, n, risk, rmax};
                bool dom = eval_bound_in_domain(in);
                std::string bound;
                if (dom && risk <= inflated_threshold(tau, alpha, N))
                  bound = cell(eval_power_bound(in));
                csv.row({"eval", cell(alpha), cell(tau), "", cell(N), cell(n),
                         cell(risk), "", cell(rmax), "",
                         dom ? "1" : "0", bound});
              }
  }
  if (family != "eval") {
    auto Bs = param_nums(p, "B", {1.0});
    auto deltas = param_nums(p, "delta", {0.1, 0.25});
    auto delta_maxs = param_nums(p, "delta_max", {1.0});
    for (double alpha : alphas)
      for (double B : Bs)
        for (uint64_t N : Ns)
          for (uint64_t n : ns)
            for (double dmax : delta_maxs)
              for (double delta : deltas) {
                CompareBoundInputs in{alpha, B, N, n, delta, dmax};
                bool dom = compare_bound_in_domain(in);
                std::string bound;
                if (dom && delta >= 0.0) bound = cell(compare_power_bound(in));
                csv.row({"compare", cell(alpha), "", cell(B), cell(N), cell(n),
                         "", cell(delta), "", cell(dmax), dom ? "1" : "0",
                         bound});
              }
  }
}

// ---------------------------------------------------------------------------
// stability
// ---------------------------------------------------------------------------

void cmd_stability(const ExperimentConfig& cfg, std::ostream& out) {
  const json& p = cfg.params;
  AlgorithmHandle alg = algorithm_by_name(param_str(p, "algorithm", "1-nn"));
  std::optional<AlgorithmHandle> alg1;
  std::optional<ComparisonFn> psi;
  if (find_param(p, "algorithm1")) {
    alg1 = algorithm_by_name(param_str(p, "algorithm1", ""));
    psi = comparison_by_name(
        param_str(p, "comparison", "loss-difference(zero-one)"));
  }
  LossFn loss = loss_by_name(param_str(p, "loss", "zero-one"));
  FiniteDistribution dist = dist_from_params(p);
  auto ns = param_u64s(p, "n", {1, 2, 4, 8});
  auto qs = param_nums(p, "q", {1.0, 2.0});
  std::string method = param_str(p, "method", "auto");
  if (method != "auto" && method != "exact" && method != "mc")
    throw ConfigError("params.method must be auto, exact, or mc");
  SeedGrid grid = grid_from_params(p);
  bool all_units = param_bool(p, "all_units", true);
  const bool pair = alg1.has_value();
  const double B = pair ? psi->bound() : loss.bound();
  std::string label = pair ? alg.name + "|" + alg1->name : alg.name;

  CsvSink csv(out,
              {"algorithm", "n", "q", "B", "beta", "stderr", "trials", "method",
               "threshold", "regime", "margin"},
              cfg);
  RngStream master(cfg.master_seed);
  uint64_t row = 0;
  for (uint64_t n : ns) {
    for (double q : qs) {
      bool exact = method == "exact" ||
                   (method == "auto" &&
                    stability_exact_feasible(dist, n, grid.seeds.size()));
      StabilityEstimate est;
      if (exact) {
        est = pair ? pair_stability_exact(alg, *alg1, *psi, dist, n, q, grid)
                   : stability_exact(alg, dist, n, q, loss, grid);
      } else {
        est = pair ? pair_stability_mc(alg, *alg1, *psi, dist, n, q, cfg.trials,
                                       master.substream(row), cfg.workers,
                                       all_units)
                   : stability_mc(alg, dist, n, q, loss, cfg.trials,
                                  master.substream(row), cfg.workers, all_units);
      }
      RegimeReport rep = regime_classify(est.overall.value, q, n, B, pair);
      csv.row({label, cell(n), cell(q), cell(B), cell(est.overall.value),
               cell(est.overall.stderr_), cell(est.overall.trials),
               exact ? "exact" : "mc", cell(rep.threshold),
               regime_name(rep.regime), cell(rep.margin)});
      ++row;
    }
  }
}

// ---------------------------------------------------------------------------
// phase
// ---------------------------------------------------------------------------

void cmd_phase(const ExperimentConfig& cfg, std::ostream& out) {
  const json& p = cfg.params;
  LossFn loss = loss_by_name(param_str(p, "loss", "zero-one"));
  FiniteDistribution dist = dist_from_params(p);
  auto ns = param_u64s(p, "n", {1, 2, 4, 8, 16});
  auto qs = param_nums(p, "q", {1.0, 2.0});
  SeedGrid grid = grid_from_params(p);
  bool all_units = param_bool(p, "all_units", false);

  std::vector<AlgorithmHandle> algs;
  if (const json* j = find_param(p, "algorithms")) {
    if (!j->is_array()) throw ConfigError("params.algorithms: expected a list");
    for (const auto& e : *j) {
      if (!e.is_string()) throw ConfigError("params.algorithms: expected names");
      algs.push_back(algorithm_by_name(e.get<std::string>()));
    }
  } else {
    algs = builtin_algorithms();
  }

  const double B = loss.bound();
  CsvSink csv(out,
              {"algorithm", "n", "q", "B", "beta", "stderr", "method",
               "threshold", "regime", "margin"},
              cfg);
  RngStream master(cfg.master_seed);
  uint64_t row = 0;
  for (const AlgorithmHandle& alg : algs) {
    for (uint64_t n : ns) {
      for (double q : qs) {
        bool exact = stability_exact_feasible(dist, n, grid.seeds.size());
        StabilityEstimate est =
            exact ? stability_exact(alg, dist, n, q, loss, grid)
                  : stability_mc(alg, dist, n, q, loss, cfg.trials,
                                 master.substream(row), cfg.workers, all_units);
        RegimeReport rep = regime_classify(est.overall.value, q, n, B, false);
        csv.row({alg.name, cell(n), cell(q), cell(B), cell(est.overall.value),
                 cell(est.overall.stderr_), exact ? "exact" : "mc",
                 cell(rep.threshold), regime_name(rep.regime),
                 cell(rep.margin)});
        ++row;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// adversary
// ---------------------------------------------------------------------------

void cmd_adversary(const ExperimentConfig& cfg, std::ostream& out) {
  const json& p = cfg.params;
  std::string family = param_str(p, "family", "eval");
  size_t n = param_u64(p, "n", 1);
  uint64_t N = param_u64(p, "N", 8);
  double epsilon = param_num(p, "epsilon", 0.01);
  RngStream master(cfg.master_seed);

  json doc{{"config", cfg.to_json()}, {"config_hash", cfg.hash()}};
  if (family == "eval") {
    AlgorithmHandle alg =
        algorithm_by_name(param_str(p, "algorithm", "constant(0)"));
    LossFn loss = loss_by_name(param_str(p, "loss", "zero-one"));
    FiniteDistribution dist = find_param(p, "dist")
                                  ? FiniteDistribution::from_json(p.at("dist"))
                                  : skewed_two_atom();
    double tau = param_num(p, "tau", 0.5);
    double alpha = param_num(p, "alpha", 0.5);
    TestProtocol proto = binom_test_protocol({n, tau, alpha, loss});
    AdversaryBundle bundle =
        build_eval_adversary(alg, dist, loss, tau, alpha, N, n, proto, epsilon,
                             master.substream(0));
    doc["bundle"] = bundle.to_json();
    if (param_bool(p, "coupling", true) && cfg.trials > 0) {
      CouplingReport rep =
          coupling_demo(proto, alg, bundle, dist, N, cfg.trials,
                        master.substream(1), cfg.workers);
      doc["coupling"] = rep.to_json();
    } else {
      doc["coupling"] = nullptr;
    }
  } else if (family == "unbounded") {
    AlgorithmHandle alg =
        algorithm_by_name(param_str(p, "algorithm", "empirical-mean"));
    LossFn loss = loss_by_name(param_str(p, "loss", "squared"));
    FiniteDistribution dist = find_param(p, "dist")
                                  ? FiniteDistribution::from_json(p.at("dist"))
                                  : skewed_two_atom();
    double tau = param_num(p, "tau", 1.0);
    double delta = param_num(p, "delta", 0.5);
    AdversaryBundle bundle =
        build_unbounded_adversary(alg, dist, loss, tau, delta, n);
    doc["bundle"] = bundle.to_json();
    doc["coupling"] = nullptr;  // no level-alpha protocol is implied here
  } else if (family == "compare") {
    AlgorithmHandle alg0 =
        algorithm_by_name(param_str(p, "algorithm0", "constant(1)"));
    AlgorithmHandle alg1 =
        algorithm_by_name(param_str(p, "algorithm1", "constant(0)"));
    ComparisonFn psi = comparison_by_name(
        param_str(p, "comparison", "loss-difference(zero-one)"));
    FiniteDistribution dist = dist_from_params(p);
    double alpha = param_num(p, "alpha", 0.5);
    TestProtocol proto = compare_binom_protocol(n, alpha, psi);
    AdversaryBundle bundle =
        build_compare_adversary(alg0, alg1, dist, psi, alpha, N, n, proto,
                                epsilon, master.substream(0));
    doc["bundle"] = bundle.to_json();
    if (param_bool(p, "coupling", true) && cfg.trials > 0) {
      CouplingReport rep =
          coupling_demo(proto, alg0, bundle, dist, N, cfg.trials,
                        master.substream(1), cfg.workers, &alg1);
      doc["coupling"] = rep.to_json();
    } else {
      doc["coupling"] = nullptr;
    }
  } else {
    throw ConfigError("params.family must be eval, unbounded, or compare");
  }
  out << doc.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

void cmd_compare(const ExperimentConfig& cfg, std::ostream& out) {
  const json& p = cfg.params;
  AlgorithmHandle alg0 =
      algorithm_by_name(param_str(p, "algorithm0", "constant(1)"));
  AlgorithmHandle alg1 =
      algorithm_by_name(param_str(p, "algorithm1", "constant(0)"));
  ComparisonFn psi = comparison_by_name(
      param_str(p, "comparison", "loss-difference(zero-one)"));
  FiniteDistribution dist = dist_from_params(p);
  size_t n = param_u64(p, "n", 1);
  auto alphas = param_nums(p, "alpha", {0.05});
  auto Ns = param_u64s(p, "N", {8, 16, 32, 64});
  SeedGrid grid = grid_from_params(p);

  Estimate delta;
  RngStream master(cfg.master_seed);
  if (enumerable(dist, n + 1)) {
    delta = delta_exact(alg0, alg1, psi, dist, n, grid);
  } else {
    delta = delta_mc(alg0, alg1, psi, dist, n, cfg.trials,
                     master.substream(~0ULL), cfg.workers);
  }
  double delta_max = max_delta(dist, psi).value;

  CsvSink csv(out,
              {"n", "N", "alpha", "B", "delta", "delta_max", "reject_rate",
               "reject_stderr", "in_domain", "bound"},
              cfg);
  uint64_t row = 0;
  for (double alpha : alphas) {
    TestProtocol proto = compare_binom_protocol(n, alpha, psi);
    for (uint64_t N : Ns) {
      McRate est = mc_protocol_rate(proto, alg0, &alg1, dist, N, cfg.trials,
                                    cfg.workers, master.substream(row));
      CompareBoundInputs in{alpha, psi.bound(), N, n, delta.value, delta_max};
      bool dom = compare_bound_in_domain(in);
      std::string bound;
      if (dom && delta.value >= 0.0) bound = cell(compare_power_bound(in));
      csv.row({cell(n), cell(N), cell(alpha), cell(psi.bound()),
               cell(delta.value), cell(delta_max), cell(est.rate),
               cell(est.se), dom ? "1" : "0", bound});
      ++row;
    }
  }
}

// ---------------------------------------------------------------------------
// reduce
// ---------------------------------------------------------------------------

void cmd_reduce(const ExperimentConfig& cfg, std::ostream& out) {
  const json& p = cfg.params;
  uint64_t instances = param_u64(p, "instances", 20);
  size_t n = param_u64(p, "n", 2);
  double q = param_num(p, "q", 1.0);

  const std::vector<AlgorithmHandle> zoo = {
      constant_predictor(0.0), constant_predictor(1.0), majority_vote(),
      knn(1),                  empirical_mean(),        seed_coin(0.5)};

  CsvSink csv(out,
              {"instance", "support", "n", "q", "algorithm0", "algorithm1",
               "psi", "risk_gap", "extremal_gap", "stability_gap", "max_gap"},
              cfg);
  RngStream master(cfg.master_seed);
  for (uint64_t i = 0; i < instances; ++i) {
    RngStream r = master.substream(i);
    const size_t support = 2 + r.next_below(2);
    std::vector<Atom> atoms;
    std::unordered_set<DataPoint, DataPointHash> seen;
    std::vector<uint64_t> weights;
    uint64_t total = 0;
    while (atoms.size() < support) {
      DataPoint pt{static_cast<int64_t>(r.next_below(3)),
                   static_cast<int64_t>(r.next_below(3))};
      if (!seen.insert(pt).second) continue;
      uint64_t w = 1 + r.next_below(9);
      atoms.push_back({pt, 0.0});
      weights.push_back(w);
      total += w;
    }
    for (size_t k = 0; k < atoms.size(); ++k)
      atoms[k].p = static_cast<double>(weights[k]) / static_cast<double>(total);
    FiniteDistribution dist(std::move(atoms), "random-" + std::to_string(i));

    const AlgorithmHandle& a0 = zoo[r.next_below(zoo.size())];
    const AlgorithmHandle& a1 = zoo[r.next_below(zoo.size())];
    ComparisonFn psi = r.next_below(2) == 0
                           ? ComparisonFn::loss_difference(LossFn::zero_one())
                           : ComparisonFn::loss_order_indicator(LossFn::zero_one());

    ReductionReport rep = reduction_identity_check(a0, a1, psi, dist, n, q);
    csv.row({cell(i), cell(support), cell(n), cell(q), a0.name, a1.name,
             psi.name(), cell(rep.risk_identity_gap),
             cell(rep.extremal_identity_gap), cell(rep.stability_identity_gap),
             cell(rep.max_gap())});
  }
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

void cmd_replay(const ExperimentConfig& cfg, const json* recorded,
                std::ostream& out) {
  const json& p = cfg.params;
  json proto_j = json::object();
  if (const json* j = find_param(p, "protocol")) {
    if (!j->is_object()) throw ConfigError("params.protocol: expected object");
    proto_j = *j;
  }
  std::string type = param_str(proto_j, "type", "binom");
  FiniteDistribution dist = dist_from_params(p);
  size_t N = param_u64(p, "N", 12);
  AlgorithmHandle alg =
      algorithm_by_name(param_str(p, "algorithm", "majority-vote"));

  TestProtocol proto;
  std::optional<AlgorithmHandle> alg1;
  if (type == "binom") {
    proto = binom_test_protocol(
        {param_u64(proto_j, "n", 1), param_num(proto_j, "tau", 0.5),
         param_num(proto_j, "alpha", 0.05),
         loss_by_name(param_str(proto_j, "loss", "zero-one"))});
  } else if (type == "compare") {
    ComparisonFn psi = comparison_by_name(
        param_str(proto_j, "psi", "loss-difference(zero-one)"));
    proto = compare_binom_protocol(param_u64(proto_j, "n", 1),
                                   param_num(proto_j, "alpha", 0.05), psi);
    alg1 = algorithm_by_name(param_str(p, "algorithm1", "constant(0)"));
  } else if (type == "cv") {
    proto = cv_threshold_protocol(param_u64(proto_j, "K", 2),
                                  param_num(proto_j, "tau", 0.5),
                                  loss_by_name(param_str(proto_j, "loss", "zero-one")));
  } else {
    throw ConfigError("params.protocol.type must be binom, compare, or cv");
  }

  RngStream master(cfg.master_seed);
  RngStream data_rng = master.substream(0);
  Dataset input = dist.sample_dataset(N, data_rng);
  RunResult res = alg1 ? run_compare_test(proto, alg, *alg1, input,
                                          master.substream(1))
                       : run_test(proto, alg, input, master.substream(1));
  std::string fresh = res.transcript.serialize();

  if (recorded) {
    if (!recorded->is_object() || !recorded->contains("transcript"))
      throw ConfigError("replay input: expected an object with 'transcript'");
    std::string want = (*recorded)["transcript"].dump();
    if (fresh != want)
      throw VerificationError(
          "replay mismatch: fresh transcript differs from the recording");
    out << json{{"replay", "ok"},
                {"decision", res.decision},
                {"rounds", res.transcript.rounds.size()},
                {"config_hash", cfg.hash()}}
               .dump(2)
        << "\n";
  } else {
    out << json{{"config", cfg.to_json()},
                {"config_hash", cfg.hash()},
                {"transcript", res.transcript.to_json()}}
               .dump(2)
        << "\n";
  }
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

void run_experiment(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.kind == "power") return cmd_power(cfg, out);
  if (cfg.kind == "critical") return cmd_critical(cfg, out);
  if (cfg.kind == "validate") return cmd_validate(cfg, out);
  if (cfg.kind == "bound") return cmd_bound(cfg, out);
  if (cfg.kind == "stability") return cmd_stability(cfg, out);
  if (cfg.kind == "phase") return cmd_phase(cfg, out);
  if (cfg.kind == "adversary") return cmd_adversary(cfg, out);
  if (cfg.kind == "compare") return cmd_compare(cfg, out);
  if (cfg.kind == "reduce") return cmd_reduce(cfg, out);
  if (cfg.kind == "replay") return cmd_replay(cfg, nullptr, out);
  throw ConfigError("unknown experiment kind '" + cfg.kind + "'");
}

}  // namespace bbeval
