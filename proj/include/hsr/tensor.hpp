// Dense row-major tensor substrate and the deterministic RNG used for
// weight initialization. Layout convention for 3-D feature volumes is
// H x W x C with the channel axis fastest.
#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsr {

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ValueError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s)
      : shape(std::move(s)), data(count_of(shape), 0.0) {}
  Tensor(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    require(count_of(shape) == data.size(), "Tensor: shape/data mismatch");
  }

  static std::size_t count_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t e : s) {
      require(e > 0, "Tensor: zero extent");
      n *= e;
    }
    return n;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  double& at2(std::size_t i, std::size_t j) {
    return data[i * shape[1] + j];
  }
  double at2(std::size_t i, std::size_t j) const {
    return data[i * shape[1] + j];
  }
  double& at3(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  double at3(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  double& at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }
  double at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }
};

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool all_finite(const Tensor& t) { return all_finite(t.data); }

// SplitMix64. Fixed for the whole repository so that every seeded
// operation is bit-reproducible across platforms.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

// Fan rules by rank:
//   1-D [n]              fan_in = fan_out = n
//   2-D [out, in]        fan_in = in, fan_out = out
//   4-D [kh, kw, ci, co] fan_in = kh*kw*ci, fan_out = kh*kw*co
inline void xavier_fans(const std::vector<std::size_t>& shape,
                        std::size_t& fan_in, std::size_t& fan_out) {
  switch (shape.size()) {
    case 1:
      fan_in = fan_out = shape[0];
      break;
    case 2:
      fan_out = shape[0];
      fan_in = shape[1];
      break;
    case 4:
      fan_in = shape[0] * shape[1] * shape[2];
      fan_out = shape[0] * shape[1] * shape[3];
      break;
    default:
      throw ShapeError("xavier_init: no fan rule for rank " +
                       std::to_string(shape.size()));
  }
}

inline Tensor xavier_init(Rng& rng, std::vector<std::size_t> shape) {
  std::size_t fan_in = 0, fan_out = 0;
  xavier_fans(shape, fan_in, fan_out);
  const double bound = std::sqrt(6.0 / double(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (double& x : t.data) x = rng.uniform(-bound, bound);
  return t;
}

}  // namespace hsr
