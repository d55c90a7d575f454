// Timing helpers for the linear-complexity evidence: median wall-time of
// the selective scan across sequence lengths, plus a deliberately
// quadratic all-pairs reference for contrast.
#pragma once

#include <algorithm>
#include <chrono>
#include <vector>

#include "hsr/ssm.hpp"

namespace hsr {

struct BenchPoint {
  std::size_t length = 0;
  double median_seconds = 0.0;
};

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline SelectiveParams bench_params(std::size_t state_size,
                                    std::uint64_t seed) {
  Rng rng(seed);
  SelectiveParams sp;
  sp.d_model = 1;
  sp.state_size = state_size;
  sp.a = Tensor({1, state_size});
  for (std::size_t i = 0; i < state_size; ++i)
    sp.a.data[i] = -double(i + 1);
  sp.d_skip = {1.0};
  sp.w_delta = Tensor({1, 1}, {rng.uniform(-1.0, 1.0)});
  sp.b_delta = {0.0};
  sp.w_b = xavier_init(rng, {state_size, 1});
  sp.b_b.assign(state_size, 0.0);
  sp.w_c = xavier_init(rng, {state_size, 1});
  sp.b_c.assign(state_size, 0.0);
  return sp;
}

inline BenchPoint bench_selective_scan(std::size_t length,
                                       std::size_t state_size,
                                       std::size_t reps,
                                       std::uint64_t seed = 17) {
  const SelectiveParams sp = bench_params(state_size, seed);
  Rng rng(seed + 1);
  std::vector<double> x(length);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);

  std::vector<double> times;
  volatile double sink = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> y = selective_scan(sp, x, length);
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + y.back();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  return BenchPoint{length, detail::median_of(times)};
}

// Naive all-pairs mixing, O(L^2); exists only as a scaling contrast.
inline BenchPoint bench_quadratic_reference(std::size_t length,
                                            std::size_t reps,
                                            std::uint64_t seed = 17) {
  Rng rng(seed);
  std::vector<double> x(length);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);

  std::vector<double> times;
  volatile double sink = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    double acc = 0.0;
    for (std::size_t i = 0; i < length; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < length; ++j)
        row += x[i] * x[j] * (i + j % 7 == 0 ? 1.0 : 0.5);
      acc += row;
    }
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + acc;
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  return BenchPoint{length, detail::median_of(times)};
}

}  // namespace hsr
