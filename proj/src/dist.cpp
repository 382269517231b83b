#include "bbeval/dist.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace bbeval {

namespace {
constexpr double kMassTol = 1e-12;
}

// ---------------------------------------------------------------------------
// FiniteDistribution
// ---------------------------------------------------------------------------

FiniteDistribution::FiniteDistribution(std::vector<Atom> atoms, std::string name)
    : atoms_(std::move(atoms)), name_(std::move(name)) {
  if (atoms_.empty()) throw ConfigError("distribution needs at least one atom");
  std::unordered_set<DataPoint, DataPointHash> seen;
  double total = 0.0;
  for (const auto& a : atoms_) {
    if (!(a.p > 0.0) || !std::isfinite(a.p)) {
      throw ConfigError("atom probabilities must be strictly positive");
    }
    if (!seen.insert(a.point).second) {
      throw ConfigError("duplicate support point (" + std::to_string(a.point.x) +
                        "," + std::to_string(a.point.y) + ")");
    }
    total += a.p;
  }
  if (std::abs(total - 1.0) > kMassTol) {
    throw ConfigError("atom probabilities sum to " + std::to_string(total) +
                      ", expected 1 within 1e-12");
  }
  cdf_.reserve(atoms_.size());
  double run = 0.0;
  for (const auto& a : atoms_) {
    run += a.p;
    cdf_.push_back(run);
  }
  cdf_.back() = 1.0;  // guard the last bucket against rounding
}

double FiniteDistribution::prob_of(const DataPoint& pt) const {
  for (const auto& a : atoms_) {
    if (a.point == pt) return a.p;
  }
  return 0.0;
}

DataPoint FiniteDistribution::sample(RngStream& rng) const {
  double u = rng.next_unit();
  size_t i = std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin();
  if (i >= atoms_.size()) i = atoms_.size() - 1;
  return atoms_[i].point;
}

Dataset FiniteDistribution::sample_dataset(size_t n, RngStream& rng) const {
  Dataset out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.push_back(sample(rng));
  return out;
}

nlohmann::json FiniteDistribution::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : atoms_) {
    arr.push_back({{"x", a.point.x}, {"y", a.point.y}, {"p", a.p}});
  }
  return nlohmann::json{{"name", name_}, {"atoms", arr}};
}

FiniteDistribution FiniteDistribution::from_json(const nlohmann::json& j) {
  try {
    std::vector<Atom> atoms;
    for (const auto& a : j.at("atoms")) {
      atoms.push_back(Atom{{a.at("x").get<int64_t>(), a.at("y").get<int64_t>()},
                           a.at("p").get<double>()});
    }
    return FiniteDistribution(std::move(atoms), j.value("name", "dist"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad distribution JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Extremal risk / comparison
// ---------------------------------------------------------------------------

std::vector<double> default_prediction_space(const FiniteDistribution& dist) {
  std::vector<double> space{0.0, 1.0};
  for (const auto& a : dist.atoms()) space.push_back(static_cast<double>(a.point.y));
  std::sort(space.begin(), space.end());
  space.erase(std::unique(space.begin(), space.end()), space.end());
  return space;
}

namespace {

// Joint mass regrouped per feature value, in first-appearance order.
struct ConditionalSlice {
  int64_t x;
  std::vector<std::pair<int64_t, double>> label_mass;  // (y, joint p)
};

std::vector<ConditionalSlice> group_by_x(const FiniteDistribution& dist) {
  std::vector<ConditionalSlice> slices;
  std::unordered_map<int64_t, size_t> where;
  for (const auto& a : dist.atoms()) {
    auto it = where.find(a.point.x);
    if (it == where.end()) {
      where.emplace(a.point.x, slices.size());
      slices.push_back({a.point.x, {{a.point.y, a.p}}});
    } else {
      slices[it->second].label_mass.emplace_back(a.point.y, a.p);
    }
  }
  return slices;
}

FittedModel table_model(std::unordered_map<int64_t, double> table,
                        double fallback, std::string descriptor) {
  return FittedModel{
      [table = std::move(table), fallback](int64_t x) {
        auto it = table.find(x);
        return it == table.end() ? fallback : it->second;
      },
      std::move(descriptor)};
}

}  // namespace

ExtremalRisk max_risk(const FiniteDistribution& dist, const LossFn& loss,
                      std::vector<double> space) {
  if (space.empty()) space = default_prediction_space(dist);
  ExtremalRisk out;
  out.measurable_sup_infinite = !loss.bounded();
  std::unordered_map<int64_t, double> table;
  for (const auto& slice : group_by_x(dist)) {
    double best = -1.0;
    double best_pred = space.front();
    for (double yhat : space) {
      double v = 0.0;  // joint-weighted conditional loss
      for (const auto& [y, p] : slice.label_mass) v += p * loss(yhat, y);
      if (v > best) { best = v; best_pred = yhat; }
    }
    out.value += best;
    table.emplace(slice.x, best_pred);
  }
  out.witness = table_model(std::move(table), space.front(),
                            "max-risk-witness[" + dist.name() + "," + loss.name() + "]");
  return out;
}

ExtremalDelta max_delta(const FiniteDistribution& dist, const ComparisonFn& psi,
                        std::vector<double> space) {
  if (space.empty()) space = default_prediction_space(dist);
  ExtremalDelta out;
  std::unordered_map<int64_t, double> table0, table1;
  for (const auto& slice : group_by_x(dist)) {
    double best = -std::numeric_limits<double>::infinity();
    double best_a = space.front(), best_b = space.front();
    for (double a : space) {
      for (double b : space) {
        double v = 0.0;
        for (const auto& [y, p] : slice.label_mass) v += p * psi(a, b, y);
        if (v > best) { best = v; best_a = a; best_b = b; }
      }
    }
    out.value += best;
    table0.emplace(slice.x, best_a);
    table1.emplace(slice.x, best_b);
  }
  std::string tag = "[" + dist.name() + "," + psi.name() + "]";
  out.witness0 = table_model(std::move(table0), space.front(), "max-delta-loser" + tag);
  out.witness1 = table_model(std::move(table1), space.front(), "max-delta-winner" + tag);
  return out;
}

// ---------------------------------------------------------------------------
// Atom surgery
// ---------------------------------------------------------------------------

FiniteDistribution conditional_without_atom(const FiniteDistribution& dist,
                                            const DataPoint& pt) {
  double p_star = dist.prob_of(pt);
  if (p_star == 0.0) return dist;
  if (p_star >= 1.0) {
    throw ConfigError("cannot condition away the whole distribution");
  }
  std::vector<Atom> atoms;
  for (const auto& a : dist.atoms()) {
    if (a.point == pt) continue;
    atoms.push_back({a.point, a.p / (1.0 - p_star)});
  }
  // Remove any renormalization drift so the constructor's mass check is exact.
  double total = 0.0;
  for (const auto& a : atoms) total += a.p;
  for (auto& a : atoms) a.p /= total;
  return FiniteDistribution(std::move(atoms), dist.name() + "\\{pt}");
}

FiniteDistribution inject_atom(const FiniteDistribution& base,
                               const DataPoint& pt, double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("mixture mass c must be in [0,1]");
  if (base.contains(pt)) {
    throw ConfigError("injected point is already in the support");
  }
  if (c == 0.0) return base;
  if (c == 1.0) return FiniteDistribution({{pt, 1.0}}, base.name() + "+pt");
  std::vector<Atom> atoms;
  for (const auto& a : base.atoms()) atoms.push_back({a.point, (1.0 - c) * a.p});
  atoms.push_back({pt, c});
  double total = 0.0;
  for (const auto& a : atoms) total += a.p;
  for (auto& a : atoms) a.p /= total;
  return FiniteDistribution(std::move(atoms), base.name() + "+pt");
}

// ---------------------------------------------------------------------------
// Couplings
// ---------------------------------------------------------------------------

namespace {

// Union-support mass table for (p, q), in p-then-q first-appearance order.
struct MassPair {
  DataPoint pt;
  double p = 0.0, q = 0.0;
};

std::vector<MassPair> union_masses(const FiniteDistribution& p,
                                   const FiniteDistribution& q) {
  std::vector<MassPair> rows;
  std::unordered_map<DataPoint, size_t, DataPointHash> where;
  for (const auto& a : p.atoms()) {
    where.emplace(a.point, rows.size());
    rows.push_back({a.point, a.p, 0.0});
  }
  for (const auto& a : q.atoms()) {
    auto it = where.find(a.point);
    if (it == where.end()) {
      rows.push_back({a.point, 0.0, a.p});
    } else {
      rows[it->second].q = a.p;
    }
  }
  return rows;
}

}  // namespace

double total_variation(const FiniteDistribution& p, const FiniteDistribution& q) {
  double tv = 0.0;
  for (const auto& row : union_masses(p, q)) tv += std::abs(row.p - row.q);
  return 0.5 * tv;
}

CoupledDraw maximal_coupling_sample(const FiniteDistribution& p,
                                    const FiniteDistribution& q, RngStream& rng) {
  auto rows = union_masses(p, q);
  double overlap = 0.0;
  for (const auto& row : rows) overlap += std::min(row.p, row.q);

  auto draw_from = [&](auto mass_of, double total) {
    double u = rng.next_unit() * total;
    double run = 0.0;
    for (const auto& row : rows) {
      run += mass_of(row);
      if (u < run) return row.pt;
    }
    // Rounding pushed u past the last bucket; return the last positive one.
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
      if (mass_of(*it) > 0.0) return it->pt;
    }
    return rows.back().pt;
  };

  CoupledDraw out;
  if (rng.next_unit() < overlap) {
    // Shared component: one draw from the normalized overlap.
    DataPoint z = draw_from([](const MassPair& r) { return std::min(r.p, r.q); },
                            overlap);
    out.a = out.b = z;
    out.equal = true;
    return out;
  }
  // Residual components, drawn independently.
  out.a = draw_from([](const MassPair& r) { return std::max(r.p - r.q, 0.0); },
                    1.0 - overlap);
  out.b = draw_from([](const MassPair& r) { return std::max(r.q - r.p, 0.0); },
                    1.0 - overlap);
  out.equal = out.a == out.b;  // residual supports are disjoint -> false
  return out;
}

}  // namespace bbeval
