#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "bbeval/btest.hpp"
#include "bbeval/core.hpp"
#include "bbeval/dist.hpp"
#include "bbeval/harness.hpp"
#include "bbeval/parallel.hpp"

// Benchmark: the OpenMP Monte Carlo driver against the serial reference, on
// the workload the experiments actually run (one protocol execution per
// trial). Also asserts the two paths agree bitwise - the chunked summation is
// designed so the schedule cannot change the result.

using namespace bbeval;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  uint64_t trials = 40000;
  if (argc > 1) trials = std::strtoull(argv[1], nullptr, 10);

  FiniteDistribution dist({{{0, 0}, 0.75}, {{0, 1}, 0.25}}, "bernoulli(0.25)");
  TestProtocol proto = binom_test_protocol({1, 0.5, 0.05, LossFn::zero_one()});
  AlgorithmHandle alg = constant_predictor(0.0);
  const size_t N = 10;  // five batches of train-one, score-one
  RngStream master(20260815);

  auto per_trial = [&](uint64_t t, double* out) {
    RngStream trial = master.substream(t);
    RngStream data_rng = trial.substream(0);
    RngStream run_rng = trial.substream(1);
    Dataset data = dist.sample_dataset(N, data_rng);
    out[0] = static_cast<double>(run_test(proto, alg, data, run_rng).decision);
  };

  std::printf("protocol-power benchmark: %llu trials\n",
              static_cast<unsigned long long>(trials));

  auto t0 = std::chrono::steady_clock::now();
  McMoments ref = mc_run_serial(trials, 1, per_trial);
  double serial_s = seconds_since(t0);
  std::printf("  serial reference   %8.3fs   mean=%.12g\n", serial_s,
              ref.mean(0));

  for (int workers : {1, 2, 4, 8}) {
    t0 = std::chrono::steady_clock::now();
    McMoments par = mc_run(trials, 1, workers, per_trial);
    double par_s = seconds_since(t0);
    bool same = std::memcmp(par.sum.data(), ref.sum.data(),
                            sizeof(double) * par.sum.size()) == 0 &&
                std::memcmp(par.sumsq.data(), ref.sumsq.data(),
                            sizeof(double) * par.sumsq.size()) == 0;
    std::printf("  mc_run workers=%-2d  %8.3fs   speedup=%.2fx   bitwise=%s\n",
                workers, par_s, serial_s / par_s, same ? "ok" : "MISMATCH");
    if (!same) return 1;
  }
  return 0;
}
