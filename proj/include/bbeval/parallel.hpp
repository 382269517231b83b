#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bbeval {

// Monte Carlo trial loops, parallelized so that the result is bit-identical
// for ANY worker count and ANY schedule:
//   * trial t draws only from RNG streams forked off (master, t), never from
//     shared state, so trials commute;
//   * per-trial outputs are accumulated into fixed 1024-trial chunks, and the
//     chunk partials are combined serially in chunk order, so floating-point
//     addition order is pinned no matter which thread ran which chunk.
// mc_run_serial is the plain-loop reference implementation; it performs the
// exact same chunked summation and must agree bitwise with mc_run (tested).

inline constexpr uint64_t kMcChunk = 1024;

struct McMoments {
  uint64_t trials = 0;
  std::vector<double> sum;    // per coordinate
  std::vector<double> sumsq;  // per coordinate

  double mean(size_t i = 0) const {
    return trials ? sum[i] / static_cast<double>(trials) : 0.0;
  }
  // Standard error of the mean (sample variance / trials, clamped at 0).
  double stderr_of_mean(size_t i = 0) const {
    if (trials < 2) return 0.0;
    double m = mean(i);
    double var = (sumsq[i] - static_cast<double>(trials) * m * m) /
                 static_cast<double>(trials - 1);
    if (var < 0.0) var = 0.0;
    return std::sqrt(var / static_cast<double>(trials));
  }
};

namespace detail {

// One chunk's worth of work: trials [lo, hi), accumulated locally.
template <class F>
inline void mc_chunk(uint64_t lo, uint64_t hi, size_t dim, F& per_trial,
                     double* sum, double* sumsq, std::vector<double>& scratch) {
  for (size_t d = 0; d < dim; ++d) { sum[d] = 0.0; sumsq[d] = 0.0; }
  for (uint64_t t = lo; t < hi; ++t) {
    per_trial(t, scratch.data());
    for (size_t d = 0; d < dim; ++d) {
      sum[d] += scratch[d];
      sumsq[d] += scratch[d] * scratch[d];
    }
  }
}

inline McMoments combine_chunks(uint64_t trials, size_t dim,
                                const std::vector<double>& partial,
                                uint64_t n_chunks) {
  McMoments out;
  out.trials = trials;
  out.sum.assign(dim, 0.0);
  out.sumsq.assign(dim, 0.0);
  for (uint64_t c = 0; c < n_chunks; ++c) {
    for (size_t d = 0; d < dim; ++d) {
      out.sum[d] += partial[(2 * c) * dim + d];
      out.sumsq[d] += partial[(2 * c + 1) * dim + d];
    }
  }
  return out;
}

}  // namespace detail

// per_trial(t, out): write `dim` doubles for trial t into out[0..dim).
// workers <= 0 means "library default" (whatever OpenMP picks).
template <class F>
McMoments mc_run(uint64_t trials, size_t dim, int workers, F per_trial) {
  const uint64_t n_chunks = trials == 0 ? 0 : (trials - 1) / kMcChunk + 1;
  std::vector<double> partial(2 * n_chunks * dim, 0.0);
#ifdef _OPENMP
#pragma omp parallel num_threads(workers > 0 ? workers : omp_get_max_threads())
  {
    std::vector<double> scratch(dim, 0.0);
#pragma omp for schedule(static)
    for (int64_t c = 0; c < static_cast<int64_t>(n_chunks); ++c) {
      uint64_t lo = static_cast<uint64_t>(c) * kMcChunk;
      uint64_t hi = lo + kMcChunk < trials ? lo + kMcChunk : trials;
      detail::mc_chunk(lo, hi, dim, per_trial,
                       &partial[(2 * c) * dim], &partial[(2 * c + 1) * dim],
                       scratch);
    }
  }
#else
  (void)workers;
  std::vector<double> scratch(dim, 0.0);
  for (uint64_t c = 0; c < n_chunks; ++c) {
    uint64_t lo = c * kMcChunk;
    uint64_t hi = lo + kMcChunk < trials ? lo + kMcChunk : trials;
    detail::mc_chunk(lo, hi, dim, per_trial,
                     &partial[(2 * c) * dim], &partial[(2 * c + 1) * dim],
                     scratch);
  }
#endif
  return detail::combine_chunks(trials, dim, partial, n_chunks);
}

// Reference implementation: no OpenMP, same chunked arithmetic.
template <class F>
McMoments mc_run_serial(uint64_t trials, size_t dim, F per_trial) {
  const uint64_t n_chunks = trials == 0 ? 0 : (trials - 1) / kMcChunk + 1;
  std::vector<double> partial(2 * n_chunks * dim, 0.0);
  std::vector<double> scratch(dim, 0.0);
  for (uint64_t c = 0; c < n_chunks; ++c) {
    uint64_t lo = c * kMcChunk;
    uint64_t hi = lo + kMcChunk < trials ? lo + kMcChunk : trials;
    detail::mc_chunk(lo, hi, dim, per_trial,
                     &partial[(2 * c) * dim], &partial[(2 * c + 1) * dim],
                     scratch);
  }
  return detail::combine_chunks(trials, dim, partial, n_chunks);
}

}  // namespace bbeval
