#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "bbeval/errors.hpp"
#include "bbeval/xcli.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bbeval;

namespace {

// Split a block of CSV text into lines (dropping the trailing newline).
std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("config json round-trip preserves every field") {
  ExperimentConfig cfg;
  cfg.kind = "power";
  cfg.master_seed = (uint64_t{1} << 63) + 5;  // past double precision
  cfg.trials = 12345;
  cfg.workers = 4;
  cfg.params = {{"m", {1, 2}}, {"tau", 0.5}};

  nlohmann::json j = cfg.to_json();
  ExperimentConfig back = ExperimentConfig::from_json(j);
  CHECK(back.kind == "power");
  CHECK(back.master_seed == cfg.master_seed);
  CHECK(back.trials == 12345);
  CHECK(back.workers == 4);
  CHECK(back.params == cfg.params);
  CHECK(back.to_json() == j);
}

TEST_CASE("config parsing rejects unknown keys and wrong types") {
  nlohmann::json ok{{"kind", "power"}, {"master_seed", 7}};
  CHECK(ExperimentConfig::from_json(ok).master_seed == 7);

  nlohmann::json stray = ok;
  stray["tau"] = 0.5;  // belongs inside params
  CHECK_THROWS_AS(ExperimentConfig::from_json(stray), ConfigError);

  nlohmann::json bad_type{{"kind", "power"}, {"master_seed", "seven"}};
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad_type), ConfigError);

  nlohmann::json bad_params{{"kind", "power"}, {"params", 3}};
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad_params), ConfigError);

  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::array()),
                  ConfigError);
}

TEST_CASE("config hash: stable width, sensitive to params, blind to workers") {
  ExperimentConfig cfg;
  cfg.kind = "power";
  cfg.params = {{"m", {3}}};
  std::string h = cfg.hash();
  CHECK(h.size() == 16);
  CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);

  ExperimentConfig other = cfg;
  other.params = {{"m", {5}}};
  CHECK(other.hash() != h);

  ExperimentConfig reseeded = cfg;
  reseeded.master_seed = 999;
  CHECK(reseeded.hash() != h);

  // Worker count is an execution knob, not part of the run's identity.
  ExperimentConfig threaded = cfg;
  threaded.workers = 8;
  CHECK(threaded.hash() == h);
}

TEST_CASE("algorithm lookup understands the catalog spellings") {
  CHECK(algorithm_by_name("constant(0.5)").name == "constant(0.5)");
  CHECK(algorithm_by_name("majority-vote").name == "majority-vote");
  CHECK(algorithm_by_name("3-nn").name == "3-nn");
  CHECK(algorithm_by_name("knn(2)").name == "2-nn");
  CHECK(algorithm_by_name("empirical-mean").name == "empirical-mean");
  CHECK(algorithm_by_name("seed-coin(0.25)").name == "seed-coin(0.25)");
  CHECK(algorithm_by_name("seed-coin").name == "seed-coin(0.5)");

  CHECK_THROWS_AS(algorithm_by_name("gradient-boost"), ConfigError);
  CHECK_THROWS_AS(algorithm_by_name("x-nn"), ConfigError);
  CHECK_THROWS_AS(algorithm_by_name("knn()"), ConfigError);
}

TEST_CASE("loss and comparison lookups") {
  CHECK(loss_by_name("zero-one").kind() == LossFn::Kind::ZeroOne);
  CHECK(loss_by_name("thresholded(0.5)").kind() == LossFn::Kind::Thresholded);
  CHECK(loss_by_name("squared").kind() == LossFn::Kind::Squared);
  CHECK(loss_by_name("absolute").kind() == LossFn::Kind::Absolute);
  CHECK_THROWS_AS(loss_by_name("hinge"), ConfigError);

  CHECK(comparison_by_name("loss-difference(zero-one)").kind() ==
        ComparisonFn::Kind::LossDifference);
  CHECK(comparison_by_name("loss-order(squared)").kind() ==
        ComparisonFn::Kind::LossOrderIndicator);
  CHECK_THROWS_AS(comparison_by_name("loss-difference(squared)"), ConfigError);
  CHECK_THROWS_AS(comparison_by_name("elo"), ConfigError);
}

TEST_CASE("distribution from params: default and inline forms") {
  nlohmann::json none = nlohmann::json::object();
  FiniteDistribution d = dist_from_params(none);
  CHECK(d.prob_of({0, 0}) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(d.prob_of({1, 1}) == doctest::Approx(0.25).epsilon(1e-12));

  nlohmann::json inline_dist{
      {"dist", {{"name", "custom"},
                {"atoms", {{{"x", 0}, {"y", 1}, {"p", 0.4}},
                           {{"x", 2}, {"y", 3}, {"p", 0.6}}}}}}};
  FiniteDistribution c = dist_from_params(inline_dist);
  CHECK(c.name() == "custom");
  CHECK(c.prob_of({2, 3}) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("power command: identical bytes at 1, 4, and 8 workers") {
  ExperimentConfig cfg;
  cfg.kind = "power";
  cfg.master_seed = 20260815;
  cfg.trials = 2000;
  cfg.params = {{"m", {1, 3}}, {"tau", 0.5}, {"alpha", 0.05},
                {"R", {0.0, 0.25}}, {"n", 1}};

  std::string first;
  for (int workers : {1, 4, 8}) {
    cfg.workers = workers;
    std::ostringstream out;
    cmd_power(cfg, out);
    if (first.empty()) {
      first = out.str();
    } else {
      CHECK(out.str() == first);
    }
  }
  CHECK_FALSE(first.empty());

  // Every data row carries seed + config hash as its last two fields.
  std::vector<std::string> rows = lines_of(first);
  REQUIRE(rows.size() >= 2);
  const std::string suffix = ",20260815," + cfg.hash();
  for (size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() > suffix.size());
    CHECK(rows[i].compare(rows[i].size() - suffix.size(), suffix.size(),
                          suffix) == 0);
  }
}

TEST_CASE("critical command matches the library's critical pair") {
  ExperimentConfig cfg;
  cfg.kind = "critical";
  cfg.master_seed = 5;
  cfg.params = {{"m", {3}}, {"tau", 0.5}, {"alpha", 0.05}};
  std::ostringstream out;
  cmd_critical(cfg, out);
  std::vector<std::string> rows = lines_of(out.str());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].rfind("m,tau,alpha,k_star,a_star,R,power", 0) == 0);
  // (m=3, tau=.5, alpha=.05) -> k* = 0, a* = 0.4; at R = tau power = alpha.
  CHECK(rows[1].rfind("3,0.5,0.05,0,0.4,0.5,0.05,", 0) == 0);
}

TEST_CASE("unknown experiment kinds are refused at dispatch") {
  ExperimentConfig cfg;
  cfg.kind = "teleport";
  std::ostringstream out;
  CHECK_THROWS_AS(run_experiment(cfg, out), ConfigError);
}

TEST_CASE("replay: record then verify, and tampering is caught") {
  ExperimentConfig cfg;
  cfg.kind = "replay";
  cfg.master_seed = 77;
  cfg.params = {{"protocol", {{"type", "binom"}, {"n", 1}, {"tau", 0.5},
                              {"alpha", 0.25}}},
                {"N", 6},
                {"algorithm", "majority-vote"}};

  std::ostringstream rec;
  cmd_replay(cfg, nullptr, rec);
  nlohmann::json doc = nlohmann::json::parse(rec.str());
  REQUIRE(doc.contains("transcript"));
  CHECK(doc["config_hash"] == cfg.hash());
  CHECK(doc["config"] == cfg.to_json());

  // Recording twice gives the same bytes: the run is a pure function of the
  // config.
  std::ostringstream rec2;
  cmd_replay(cfg, nullptr, rec2);
  CHECK(rec2.str() == rec.str());

  // Verification against the genuine recording passes and says so.
  std::ostringstream ver;
  cmd_replay(cfg, &doc, ver);
  nlohmann::json verdict = nlohmann::json::parse(ver.str());
  CHECK(verdict["replay"] == "ok");
  CHECK(verdict["rounds"] == 3);  // floor(6 / 2) batches

  // Any edit to the recorded transcript must be detected.
  nlohmann::json tampered = doc;
  tampered["transcript"]["decision"] =
      1 - tampered["transcript"]["decision"].get<int>();
  std::ostringstream bad;
  CHECK_THROWS_AS(cmd_replay(cfg, &tampered, bad), VerificationError);

  // And a recording that is not a recording at all is a config problem.
  nlohmann::json hollow{{"config", cfg.to_json()}};
  std::ostringstream refuse;
  CHECK_THROWS_AS(cmd_replay(cfg, &hollow, refuse), ConfigError);
}
