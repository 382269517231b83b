#include "bbeval/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "bbeval/bounds.hpp"
#include "bbeval/parallel.hpp"

namespace bbeval {

namespace {

// Safety factor keeping the chosen mixture strictly inside the feasible set,
// so the verified inequalities hold with a real margin instead of a tie.
constexpr double kEta = 1e-3;

// Seed grid used by the in-bundle verification oracles: exact for
// deterministic algorithms, a fixed midpoint average for randomized ones.
const SeedGrid& verify_grid() {
  static const SeedGrid grid = SeedGrid::equispaced(8);
  return grid;
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

VerificationCheck check_ge(std::string what, double lhs, double rhs,
                           std::string method, double tol) {
  VerificationCheck c;
  c.what = std::move(what);
  c.lhs = lhs;
  c.rhs = rhs;
  c.slack = lhs - rhs;
  c.pass = c.slack >= -tol;
  c.method = std::move(method);
  return c;
}

VerificationCheck check_le(std::string what, double lhs, double rhs,
                           std::string method, double tol) {
  VerificationCheck c;
  c.what = std::move(what);
  c.lhs = lhs;
  c.rhs = rhs;
  c.slack = rhs - lhs;
  c.pass = c.slack >= -tol;
  c.method = std::move(method);
  return c;
}

// Risk / advantage with the exact oracle when the support allows it, else
// Monte Carlo; returns the estimate and a method tag for the record.
std::pair<Estimate, std::string> risk_auto(const AlgorithmHandle& alg,
                                           const FiniteDistribution& dist,
                                           size_t n, const LossFn& loss,
                                           RngStream rng) {
  if (enumerable(dist, n + 1)) {
    return {algorithm_risk_exact(alg, dist, n, loss, verify_grid()), "exact-enum"};
  }
  const uint64_t trials = 100000;
  return {algorithm_risk_mc(alg, dist, n, loss, trials, rng),
          "mc(" + std::to_string(trials) + ")"};
}

std::pair<Estimate, std::string> delta_auto(const AlgorithmHandle& a0,
                                            const AlgorithmHandle& a1,
                                            const ComparisonFn& psi,
                                            const FiniteDistribution& dist,
                                            size_t n, RngStream rng) {
  if (enumerable(dist, n + 1)) {
    return {delta_exact(a0, a1, psi, dist, n, verify_grid()), "exact-enum"};
  }
  const uint64_t trials = 100000;
  return {delta_mc(a0, a1, psi, dist, n, trials, rng),
          "mc(" + std::to_string(trials) + ")"};
}

// Tolerance for an estimate-backed claim: float dust when exact, 4 sigma
// when Monte Carlo.
double claim_tol(const Estimate& e) { return e.exact ? 1e-9 : 4.0 * e.stderr_; }

uint64_t rare_trials_for(double epsilon) {
  // Zero hits out of T give an exact 95% upper limit ~ 3.7/T; double that
  // for headroom.
  double t = 8.0 / epsilon;
  return t < 1000.0 ? 1000 : static_cast<uint64_t>(t);
}

}  // namespace

// ---------------------------------------------------------------------------
// Verification records
// ---------------------------------------------------------------------------

bool VerificationRecord::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const VerificationCheck& c) { return c.pass; });
}

std::string VerificationRecord::summary() const {
  std::string out;
  for (const auto& c : checks) {
    out += (c.pass ? "[pass] " : "[FAIL] ") + c.what + ": " + fmt_real(c.lhs) +
           " vs " + fmt_real(c.rhs) + " (slack " + fmt_real(c.slack) + ", " +
           c.method + ")\n";
  }
  return out;
}

nlohmann::json VerificationRecord::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"what", c.what},
                   {"lhs", c.lhs},
                   {"rhs", c.rhs},
                   {"slack", c.slack},
                   {"pass", c.pass},
                   {"method", c.method}});
  }
  return arr;
}

nlohmann::json AdversaryBundle::to_json() const {
  nlohmann::json j{{"kind", kind},
                   {"rare_point", {rare_point.x, rare_point.y}},
                   {"c", c},
                   {"tilted", tilted.to_json()},
                   {"patched", patched.name},
                   {"f_star", f_star.descriptor},
                   {"params", params},
                   {"verification", verification.to_json()},
                   {"verified", verification.all_pass()}};
  if (patched1) j["patched1"] = patched1->name;
  if (f_star1) j["f_star1"] = f_star1->descriptor;
  return j;
}

// ---------------------------------------------------------------------------
// Construction pieces
// ---------------------------------------------------------------------------

double choose_mixture_mass(double alpha, double tau, uint64_t N, size_t n,
                           double risk, double risk_max) {
  if (n == 0) throw ConfigError("need n >= 1");
  if (!(risk >= 0.0) || !(risk < tau)) {
    throw ConfigError("construction needs risk < tau (got risk = " +
                      fmt_real(risk) + ", tau = " + fmt_real(tau) + ")");
  }
  const double tilde = inflated_threshold(tau, alpha, N);
  if (!(tilde < risk_max)) {
    throw ConfigError("infeasible: inflated threshold " + fmt_real(tilde) +
                      " >= extremal risk " + fmt_real(risk_max) +
                      " (no tilt can cross it)");
  }
  const double ratio = (risk_max - tilde) / (risk_max - risk);
  const double keep = (1.0 - kEta) * std::pow(ratio, 1.0 / static_cast<double>(n));
  return 1.0 - keep;
}

double choose_mixture_mass_compare(double alpha, double B, uint64_t N, size_t n,
                                   double delta, double delta_max) {
  if (n == 0) throw ConfigError("need n >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
  if (!(delta > 0.0)) {
    throw ConfigError("construction needs a positive advantage delta");
  }
  const double slack = B * (1.0 / alpha - 1.0) / static_cast<double>(N);
  if (!(delta_max > slack)) {
    throw ConfigError("infeasible: extremal advantage " + fmt_real(delta_max) +
                      " <= budget slack " + fmt_real(slack));
  }
  const double ratio = (delta_max - slack) / (delta_max + delta);
  const double keep = (1.0 - kEta) * std::pow(ratio, 1.0 / static_cast<double>(n));
  return 1.0 - keep;
}

AlgorithmHandle patch_algorithm(const AlgorithmHandle& alg,
                                const DataPoint& rare_point,
                                const FittedModel& f_star) {
  AlgorithmHandle out;
  out.name = alg.name + "'";
  out.fit = [base = alg.fit, rare_point, f_star](const Dataset& data, Seed seed) {
    if (std::find(data.begin(), data.end(), rare_point) != data.end()) {
      return f_star;
    }
    return base(data, seed);
  };
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation adversary
// ---------------------------------------------------------------------------

AdversaryBundle build_eval_adversary(const AlgorithmHandle& alg,
                                     const FiniteDistribution& dist,
                                     const LossFn& loss, double tau,
                                     double alpha, uint64_t N, size_t n,
                                     const TestProtocol& protocol,
                                     double epsilon, RngStream rng) {
  if (N == 0 || n == 0) throw ConfigError("need N >= 1 and n >= 1");

  auto [risk, risk_method] = risk_auto(alg, dist, n, loss, rng.substream(1));
  ExtremalRisk extremal = max_risk(dist, loss);
  const double c =
      choose_mixture_mass(alpha, tau, N, n, risk.value, extremal.value);
  const double tilde = inflated_threshold(tau, alpha, N);

  RarePoint rare = find_rare_point(protocol, alg, dist, N, epsilon,
                                   rare_trials_for(epsilon), rng.substream(2));
  FiniteDistribution tilted =
      inject_atom(conditional_without_atom(dist, rare.point), rare.point, c);
  AlgorithmHandle patched = patch_algorithm(alg, rare.point, extremal.witness);

  AdversaryBundle out{.kind = "eval",
                      .tilted = tilted,
                      .rare_point = rare.point,
                      .c = c,
                      .patched = patched,
                      .patched1 = std::nullopt,
                      .f_star = extremal.witness,
                      .f_star1 = std::nullopt,
                      .verification = {},
                      .params = {}};
  out.params = {{"alpha", alpha},
                {"tau", tau},
                {"N", N},
                {"n", n},
                {"epsilon", epsilon},
                {"eta", kEta},
                {"risk", risk.value},
                {"risk_method", risk_method},
                {"risk_max", extremal.value},
                {"risk_max_space_limited", extremal.measurable_sup_infinite},
                {"tilde_threshold", tilde},
                {"c", c},
                {"rare_appearance_upper", rare.appearance.hi}};

  auto& checks = out.verification.checks;
  checks.push_back(check_le("rare point appearance upper limit < epsilon",
                            rare.appearance.hi, epsilon,
                            "clopper-pearson(" +
                                std::to_string(rare.appearance.trials) + ")",
                            0.0));
  const double keep_n = std::pow(1.0 - c, static_cast<double>(n));
  checks.push_back(check_ge(
      "mixture crosses the inflated threshold: (1-c)^n R + (1-(1-c)^n) Rmax > tilde",
      keep_n * risk.value + (1.0 - keep_n) * extremal.value, tilde, "formula",
      0.0));

  auto [tilted_risk, tilted_method] =
      risk_auto(patched, tilted, n, loss, rng.substream(3));
  checks.push_back(check_ge("tilted risk reaches tau: R(A',P',n) >= tau",
                            tilted_risk.value, tau, tilted_method,
                            claim_tol(tilted_risk)));

  // Patched instability must stay inside the regime the ceiling covers:
  // gamma_q = max(2B/n^(1/q), original instability).
  if (loss.bounded() && enumerable(tilted, n + 1)) {
    for (double q : {1.0, 2.0}) {
      double beta0 =
          stability_exact(alg, dist, n, q, loss, verify_grid()).overall.value;
      double beta1 =
          stability_exact(patched, tilted, n, q, loss, verify_grid()).overall.value;
      double gamma = std::max(
          regime_classify(0.0, q, n, loss.bound()).threshold, beta0);
      checks.push_back(check_le(
          "patched instability stays in regime (q=" + fmt_real(q) + ")", beta1,
          gamma, "exact-enum", 1e-9));
    }
  }

  if (!out.verification.all_pass()) {
    throw VerificationError("eval adversary failed verification:\n" +
                            out.verification.summary());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unbounded-loss adversary
// ---------------------------------------------------------------------------

AdversaryBundle build_unbounded_adversary(const AlgorithmHandle& alg,
                                          const FiniteDistribution& dist,
                                          const LossFn& loss, double tau,
                                          double delta, size_t n) {
  if (n == 0) throw ConfigError("need n >= 1");
  if (loss.kind() != LossFn::Kind::Squared &&
      loss.kind() != LossFn::Kind::Absolute) {
    throw ConfigError(
        "unbounded construction needs the squared or absolute loss, got '" +
        loss.name() + "'");
  }
  if (!(tau > 0.0)) throw ConfigError("need tau > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("need delta in (0,1)");

  // Mass budget: delta/2 to the relabeled copy, delta/2 to the rare trigger.
  const double half = delta / 2.0;
  const double trigger_prob = 1.0 - std::pow(1.0 - half, static_cast<double>(n));
  const double C = tau / (trigger_prob * half);

  // Extreme label y0 with loss(0, y0) >= C, fresh among the support labels.
  int64_t y0 = loss.kind() == LossFn::Kind::Squared
                   ? static_cast<int64_t>(std::ceil(std::sqrt(C)))
                   : static_cast<int64_t>(std::ceil(C));
  auto label_used = [&](int64_t y) {
    for (const auto& a : dist.atoms()) {
      if (a.point.y == y) return true;
    }
    return false;
  };
  while (label_used(y0)) ++y0;

  // Fresh rare point; fixed key so the construction is reproducible.
  RngStream fresh(0x7261726574696c74ULL);
  DataPoint rare{static_cast<int64_t>(fresh.next_u64() >> 14),
                 static_cast<int64_t>(fresh.next_u64() >> 14)};
  while (dist.contains(rare) || rare.y == y0) {
    rare = DataPoint{static_cast<int64_t>(fresh.next_u64() >> 14),
                     static_cast<int64_t>(fresh.next_u64() >> 14)};
  }

  // P' = (1-delta) P + (delta/2) (P_X x {y0}) + (delta/2) rare.
  std::vector<Atom> atoms;
  for (const auto& a : dist.atoms()) {
    atoms.push_back({a.point, (1.0 - delta) * a.p});
  }
  {
    // Feature marginal, first-appearance order.
    std::vector<std::pair<int64_t, double>> marginal;
    for (const auto& a : dist.atoms()) {
      auto it = std::find_if(marginal.begin(), marginal.end(),
                             [&](const auto& m) { return m.first == a.point.x; });
      if (it == marginal.end()) {
        marginal.emplace_back(a.point.x, a.p);
      } else {
        it->second += a.p;
      }
    }
    for (const auto& [x, px] : marginal) {
      atoms.push_back({DataPoint{x, y0}, half * px});
    }
  }
  atoms.push_back({rare, half});
  double total = 0.0;
  for (const auto& a : atoms) total += a.p;
  for (auto& a : atoms) a.p /= total;
  FiniteDistribution tilted(std::move(atoms), dist.name() + "+unbounded-tilt");

  FittedModel f_star{[](int64_t) { return 0.0; }, "constant(0)[patch]"};
  AlgorithmHandle patched = patch_algorithm(alg, rare, f_star);

  AdversaryBundle out{.kind = "unbounded",
                      .tilted = tilted,
                      .rare_point = rare,
                      .c = delta,  // total mass moved off P; TV(P, P') = delta
                      .patched = patched,
                      .patched1 = std::nullopt,
                      .f_star = f_star,
                      .f_star1 = std::nullopt,
                      .verification = {},
                      .params = {}};
  out.params = {{"tau", tau},      {"delta", delta}, {"n", n},
                {"C", C},          {"y0", y0},       {"yhat0", 0.0},
                {"loss", loss.name()}};

  auto& checks = out.verification.checks;
  checks.push_back(check_le("defining identity: C * trigger * delta/2 == tau",
                            std::abs(C * trigger_prob * half - tau),
                            1e-12 * std::max(1.0, tau), "formula", 0.0));
  checks.push_back(check_ge("extreme label hurts: loss(0, y0) >= C",
                            loss(0.0, y0), C, "formula", 0.0));
  checks.push_back(check_ge(
      "risk certificate: loss(0,y0) * trigger * delta/2 >= tau",
      loss(0.0, y0) * trigger_prob * half, tau, "formula", 1e-12));
  checks.push_back(check_le("tilt is small: TV(P, P') == delta",
                            std::abs(total_variation(dist, tilted) - delta),
                            1e-12, "formula", 0.0));
  if (enumerable(tilted, n + 1)) {
    Estimate r = algorithm_risk_exact(patched, tilted, n, loss, verify_grid());
    checks.push_back(check_ge("tilted risk reaches tau: R(A',P',n) >= tau",
                              r.value, tau, "exact-enum", 1e-9));
  }

  if (!out.verification.all_pass()) {
    throw VerificationError("unbounded adversary failed verification:\n" +
                            out.verification.summary());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Comparison adversary
// ---------------------------------------------------------------------------

AdversaryBundle build_compare_adversary(const AlgorithmHandle& alg0,
                                        const AlgorithmHandle& alg1,
                                        const FiniteDistribution& dist,
                                        const ComparisonFn& psi, double alpha,
                                        uint64_t N, size_t n,
                                        const TestProtocol& protocol,
                                        double epsilon, RngStream rng) {
  if (N == 0 || n == 0) throw ConfigError("need N >= 1 and n >= 1");

  auto [delta, delta_method] =
      delta_auto(alg0, alg1, psi, dist, n, rng.substream(1));
  if (!(delta.value > 0.0)) {
    throw ConfigError("construction needs a positive advantage, measured " +
                      fmt_real(delta.value));
  }
  ExtremalDelta extremal = max_delta(dist, psi);
  const double B = psi.bound();
  const double slack = B * (1.0 / alpha - 1.0) / static_cast<double>(N);
  const double c =
      choose_mixture_mass_compare(alpha, B, N, n, delta.value, extremal.value);

  RarePoint rare = find_rare_point(protocol, alg0, dist, N, epsilon,
                                   rare_trials_for(epsilon), rng.substream(2),
                                   16, &alg1);
  FiniteDistribution tilted =
      inject_atom(conditional_without_atom(dist, rare.point), rare.point, c);
  // Swap: once the rare point shows up, the "worse" algorithm adopts the
  // extremal winner and the "better" one the extremal loser.
  AlgorithmHandle patched0 = patch_algorithm(alg0, rare.point, extremal.witness1);
  AlgorithmHandle patched1 = patch_algorithm(alg1, rare.point, extremal.witness0);

  AdversaryBundle out{.kind = "compare",
                      .tilted = tilted,
                      .rare_point = rare.point,
                      .c = c,
                      .patched = patched0,
                      .patched1 = patched1,
                      .f_star = extremal.witness1,
                      .f_star1 = extremal.witness0,
                      .verification = {},
                      .params = {}};
  out.params = {{"alpha", alpha},
                {"B", B},
                {"N", N},
                {"n", n},
                {"epsilon", epsilon},
                {"eta", kEta},
                {"delta", delta.value},
                {"delta_method", delta_method},
                {"delta_max", extremal.value},
                {"budget_slack", slack},
                {"c", c},
                {"rare_appearance_upper", rare.appearance.hi}};

  auto& checks = out.verification.checks;
  checks.push_back(check_le("rare point appearance upper limit < epsilon",
                            rare.appearance.hi, epsilon,
                            "clopper-pearson(" +
                                std::to_string(rare.appearance.trials) + ")",
                            0.0));
  const double keep_n = std::pow(1.0 - c, static_cast<double>(n));
  checks.push_back(check_le(
      "mixture flips the advantage past the slack: "
      "(1-c)^n delta - (1-(1-c)^n) delta_max < -slack",
      keep_n * delta.value - (1.0 - keep_n) * extremal.value, -slack, "formula",
      0.0));

  auto [tilted_delta, tilted_method] =
      delta_auto(patched0, patched1, psi, tilted, n, rng.substream(3));
  checks.push_back(check_le("tilted advantage flips: Delta(A0',A1',P') <= 0",
                            tilted_delta.value, 0.0, tilted_method,
                            claim_tol(tilted_delta)));

  if (enumerable(tilted, n + 1)) {
    for (double q : {1.0, 2.0}) {
      // Individual-instability regime (loss-difference comparisons).
      double g_ind = regime_classify(0.0, q, n, B).threshold;
      double b0 = pair_stability_exact(alg0, alg1, psi, dist, n, q,
                                       verify_grid()).overall.value;
      double b1 = pair_stability_exact(patched0, patched1, psi, tilted, n, q,
                                       verify_grid()).overall.value;
      // Pair-instability regime (4B threshold).
      double g_pair = regime_classify(0.0, q, n, B, true).threshold;
      checks.push_back(check_le(
          "patched pair instability stays in regime (q=" + fmt_real(q) + ")",
          b1, std::max({g_ind, g_pair, b0}), "exact-enum", 1e-9));
    }
  }

  if (!out.verification.all_pass()) {
    throw VerificationError("compare adversary failed verification:\n" +
                            out.verification.summary());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coupling demonstration
// ---------------------------------------------------------------------------

nlohmann::json CouplingReport::to_json() const {
  return nlohmann::json{{"trials", trials},
                        {"rate_original", rate_original},
                        {"se_original", se_original},
                        {"rate_tilted", rate_tilted},
                        {"se_tilted", se_tilted},
                        {"equal_rate", equal_rate},
                        {"se_equal", se_equal},
                        {"tv", tv},
                        {"expected_equal_rate", expected_equal_rate},
                        {"inflation", inflation},
                        {"epsilon", epsilon},
                        {"bound_rhs", bound_rhs},
                        {"slack", slack},
                        {"slack_sigma", slack_sigma},
                        {"inequality_ok", inequality_ok},
                        {"equality_rate_ok", equality_rate_ok}};
}

CouplingReport coupling_demo(const TestProtocol& protocol,
                             const AlgorithmHandle& alg,
                             const AdversaryBundle& bundle,
                             const FiniteDistribution& dist, size_t N,
                             uint64_t trials, RngStream rng, int workers,
                             const AlgorithmHandle* alg1) {
  if (trials == 0) throw ConfigError("coupling_demo needs trials >= 1");
  const bool comparing = alg1 != nullptr;
  if (comparing && !bundle.patched1) {
    throw ConfigError("coupling_demo got a second algorithm but the bundle "
                      "has no second patch");
  }

  McMoments m = mc_run(trials, 3, workers, [&](uint64_t t, double* out) {
    RngStream trial = rng.substream(t);
    Dataset a, b;
    a.reserve(N);
    b.reserve(N);
    bool all_equal = true;
    for (size_t i = 0; i < N; ++i) {
      CoupledDraw d = maximal_coupling_sample(dist, bundle.tilted, trial);
      a.push_back(d.a);
      b.push_back(d.b);
      all_equal = all_equal && d.equal;
    }
    // Shared protocol randomness on both sides: when the coupled datasets
    // agree and the rare point stays out of sight, the transcripts coincide.
    RngStream shared = trial.substream(1);
    int dec_a, dec_b;
    if (comparing) {
      dec_a = run_compare_test(protocol, alg, *alg1, a, shared).decision;
      dec_b = run_compare_test(protocol, bundle.patched, *bundle.patched1, b,
                               shared).decision;
    } else {
      dec_a = run_test(protocol, alg, a, shared).decision;
      dec_b = run_test(protocol, bundle.patched, b, shared).decision;
    }
    out[0] = dec_a;
    out[1] = dec_b;
    out[2] = all_equal ? 1.0 : 0.0;
  });

  CouplingReport r;
  r.trials = trials;
  r.rate_original = m.mean(0);
  r.se_original = m.stderr_of_mean(0);
  r.rate_tilted = m.mean(1);
  r.se_tilted = m.stderr_of_mean(1);
  r.equal_rate = m.mean(2);
  r.se_equal = m.stderr_of_mean(2);
  r.tv = total_variation(dist, bundle.tilted);
  r.expected_equal_rate = std::pow(1.0 - r.tv, static_cast<double>(N));
  r.inflation = std::pow(1.0 - bundle.c, -static_cast<double>(N));
  r.epsilon = bundle.params.value("epsilon", 0.0);
  r.bound_rhs = r.inflation * r.rate_tilted + r.epsilon;
  r.slack = r.bound_rhs - r.rate_original;
  r.slack_sigma = std::sqrt(r.inflation * r.inflation * r.se_tilted * r.se_tilted +
                            r.se_original * r.se_original);
  r.inequality_ok = r.slack >= -4.0 * r.slack_sigma;
  // Null stderr floor keeps the check meaningful when the sample happens to
  // be degenerate.
  double se0 = std::sqrt(std::max(
      r.expected_equal_rate * (1.0 - r.expected_equal_rate), 0.0) /
      static_cast<double>(trials));
  double se = std::max(r.se_equal, se0);
  r.equality_rate_ok = std::abs(r.equal_rate - r.expected_equal_rate) <= 4.0 * se;
  return r;
}

}  // namespace bbeval
