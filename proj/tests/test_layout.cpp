#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "hsr/layout.hpp"
#include "oracles.hpp"

using hsr::LayoutConfig;
using hsr::Permutation;
using hsr::Rng;
using hsr::Tensor;

namespace {
Tensor random_volume(Rng& rng, std::size_t h, std::size_t w, std::size_t c) {
  Tensor t({h, w, c});
  for (double& v : t.data) v = rng.uniform(0.0, 1.0);
  return t;
}
}  // namespace

TEST_CASE("bssc_flatten: 1x1xC is the channel vector") {
  const Tensor f({1, 1, 4}, {0.1, 0.2, 0.3, 0.4});
  CHECK(hsr::bssc_flatten(f) == std::vector<double>{0.1, 0.2, 0.3, 0.4});
}

TEST_CASE("bssc_flatten: explicit 2x2x2 serpentine order") {
  Tensor f({2, 2, 2});
  std::iota(f.data.begin(), f.data.end(), 0.0);  // value = flat index
  // slab 0 row-major ascending, slab 1 row-major descending
  const std::vector<double> want{0, 2, 4, 6, 7, 5, 3, 1};
  CHECK(hsr::bssc_flatten(f) == want);
}

TEST_CASE("bssc: roundtrip identity") {
  Rng rng(30);
  for (int t = 0; t < 10; ++t) {
    const std::size_t H = 1 + rng.next_u64() % 6, W = 1 + rng.next_u64() % 6,
                      C = 1 + rng.next_u64() % 8;
    const Tensor f = random_volume(rng, H, W, C);
    const Tensor back = hsr::bssc_unflatten(hsr::bssc_flatten(f), H, W, C);
    CHECK(back.data == f.data);
  }
}

TEST_CASE("lssp_partition: single window equals whole-volume BSSC") {
  Rng rng(31);
  const Tensor f = random_volume(rng, 3, 4, 2);
  const LayoutConfig cfg{3, 4, 2};
  const auto seqs = hsr::lssp_partition(f, cfg);
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0] == hsr::bssc_flatten(f));
}

TEST_CASE("lssp_partition: 4x4x4 with 2x2x2 windows") {
  Rng rng(32);
  const Tensor f = random_volume(rng, 4, 4, 4);
  const LayoutConfig cfg{2, 2, 2};
  const auto seqs = hsr::lssp_partition(f, cfg);
  REQUIRE(seqs.size() == 8);
  for (const auto& s : seqs) CHECK(s.size() == 8);
  // element (0,0,0) leads the first window
  CHECK(seqs[0][0] == f.at3(0, 0, 0));
  CHECK(hsr::lssp_merge(seqs, cfg, 4, 4, 4).data == f.data);
}

TEST_CASE("lssp: roundtrip including replicate padding") {
  Rng rng(33);
  const struct {
    std::size_t h, w, c;
  } shapes[] = {{5, 7, 3}, {2, 2, 9}, {6, 3, 4}};
  const LayoutConfig cfg{2, 2, 2};
  for (const auto& s : shapes) {
    const Tensor f = random_volume(rng, s.h, s.w, s.c);
    const Tensor back =
        hsr::lssp_merge(hsr::lssp_partition(f, cfg), cfg, s.h, s.w, s.c);
    CHECK(back.data == f.data);
  }
}

TEST_CASE("lssp: zero sequences give a zero volume, errors propagate") {
  const LayoutConfig cfg{2, 2, 2};
  std::vector<std::vector<double>> seqs(8, std::vector<double>(8, 0.0));
  const Tensor out = hsr::lssp_merge(seqs, cfg, 4, 4, 4);
  for (double v : out.data) CHECK(v == 0.0);

  seqs.pop_back();
  CHECK_THROWS_AS(hsr::lssp_merge(seqs, cfg, 4, 4, 4), hsr::ShapeError);
  CHECK_THROWS_AS(hsr::lssp_partition(Tensor({2, 2, 2}), LayoutConfig{0, 1, 1}),
                  hsr::ShapeError);
}

TEST_CASE("lssp: single marked element traces back to its coordinate") {
  const LayoutConfig cfg{2, 2, 2};
  Tensor f({4, 4, 4});
  f.at3(3, 1, 2) = 1.0;
  auto seqs = hsr::lssp_partition(f, cfg);
  std::size_t hits = 0;
  for (auto& s : seqs)
    for (double v : s)
      if (v == 1.0) ++hits;
  CHECK(hits == 1);
  const Tensor back = hsr::lssp_merge(seqs, cfg, 4, 4, 4);
  CHECK(back.at3(3, 1, 2) == 1.0);
}

TEST_CASE("spectral_correlation_matrix: duplicated and negated channels") {
  Rng rng(34);
  Tensor f({4, 4, 3});
  for (std::size_t p = 0; p < 16; ++p) {
    const double v = rng.uniform(0.0, 1.0);
    f.data[p * 3 + 0] = v;
    f.data[p * 3 + 1] = v;         // duplicate
    f.data[p * 3 + 2] = 1.0 - v;   // negated around the mean
  }
  const Tensor m = hsr::spectral_correlation_matrix(f);
  CHECK(m.at2(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.at2(0, 2) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("spectral_correlation_matrix: matches the Pearson oracle") {
  Rng rng(35);
  const Tensor f = random_volume(rng, 6, 6, 3);
  const Tensor m = hsr::spectral_correlation_matrix(f);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(m.at2(i, j) ==
            doctest::Approx(oracle::pearson(f, i, j)).epsilon(1e-12));
      CHECK(m.at2(i, j) == m.at2(j, i));
      CHECK(m.at2(i, j) >= -1.0 - 1e-12);
      CHECK(m.at2(i, j) <= 1.0 + 1e-12);
    }
  CHECK(m.at2(0, 0) == 1.0);
}

TEST_CASE("spectral_correlation_matrix: zero-variance channel is neutral") {
  Rng rng(36);
  Tensor f = random_volume(rng, 3, 3, 3);
  for (std::size_t p = 0; p < 9; ++p) f.data[p * 3 + 1] = 0.42;
  const Tensor m = hsr::spectral_correlation_matrix(f);
  CHECK(m.at2(1, 1) == 1.0);
  CHECK(m.at2(0, 1) == 0.0);
  CHECK(m.at2(2, 1) == 0.0);
}

TEST_CASE("gsrm_order: all-identical channels give the identity") {
  Rng rng(37);
  Tensor f({3, 3, 4});
  for (std::size_t p = 0; p < 9; ++p) {
    const double v = rng.uniform(0.0, 1.0);
    for (std::size_t c = 0; c < 4; ++c) f.data[p * 4 + c] = v;
  }
  const Permutation p = hsr::gsrm_order(f);
  for (std::size_t k = 0; k < 4; ++k) CHECK(p.fwd[k] == k);
}

TEST_CASE("gsrm_order: hand-built three-channel ranking") {
  // ch0 and ch2 nearly identical, ch1 mostly independent:
  // global values satisfy g0 > g2 > g1 -> order (0, 2, 1)
  Tensor f({2, 2, 3});
  const double ch0[] = {0.0, 1.0, 2.0, 3.0};
  const double ch2[] = {0.0, 1.0, 2.0, 3.5};
  const double ch1[] = {1.0, 0.0, 3.0, 1.0};
  for (std::size_t p = 0; p < 4; ++p) {
    f.data[p * 3 + 0] = ch0[p];
    f.data[p * 3 + 1] = ch1[p];
    f.data[p * 3 + 2] = ch2[p];
  }
  // confirm the intended ordering with the brute-force oracle
  const double g0 = (oracle::pearson(f, 0, 1) + oracle::pearson(f, 0, 2)) / 2;
  const double g1 = (oracle::pearson(f, 1, 0) + oracle::pearson(f, 1, 2)) / 2;
  const double g2 = (oracle::pearson(f, 2, 0) + oracle::pearson(f, 2, 1)) / 2;
  REQUIRE(g0 > g2);
  REQUIRE(g2 > g1);
  const Permutation p = hsr::gsrm_order(f);
  CHECK(p.fwd == std::vector<std::size_t>{0, 2, 1});
}

TEST_CASE("gsrm_order: valid permutation, descending global values") {
  Rng rng(38);
  const Tensor f = random_volume(rng, 5, 5, 6);
  const Permutation p = hsr::gsrm_order(f);

  std::vector<std::size_t> sorted = p.fwd;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < 6; ++k) CHECK(sorted[k] == k);

  const Tensor reordered =
      hsr::apply_band_permutation(f, p, hsr::PermDirection::Forward);
  const std::vector<double> g = hsr::global_correlation_values(
      hsr::spectral_correlation_matrix(reordered));
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] <= g[k - 1] + 1e-12);
}

TEST_CASE("gsrm_order: invariant to positive affine rescaling") {
  Rng rng(39);
  const Tensor f = random_volume(rng, 4, 4, 5);
  Tensor scaled = f;
  for (double& v : scaled.data) v = 2.5 * v + 0.3;
  CHECK(hsr::gsrm_order(f).fwd == hsr::gsrm_order(scaled).fwd);
}

TEST_CASE("gsrm_order: channel reversal reverses the ranking") {
  Rng rng(40);
  Tensor f = random_volume(rng, 5, 5, 4);
  Tensor rev(f.shape);
  for (std::size_t p = 0; p < 25; ++p)
    for (std::size_t c = 0; c < 4; ++c)
      rev.data[p * 4 + c] = f.data[p * 4 + (3 - c)];
  const Permutation pf = hsr::gsrm_order(f);
  const Permutation pr = hsr::gsrm_order(rev);
  // relabeled channels keep their rank (ties are absent generically)
  for (std::size_t k = 0; k < 4; ++k) CHECK(pr.fwd[k] == 3 - pf.fwd[k]);
}

TEST_CASE("apply_band_permutation: identity, roundtrip, swap") {
  Rng rng(41);
  const Tensor f = random_volume(rng, 3, 3, 2);

  CHECK(hsr::apply_band_permutation(f, Permutation::identity(2),
                                    hsr::PermDirection::Forward)
            .data == f.data);

  const Permutation swap = Permutation::from_forward({1, 0});
  const Tensor sw =
      hsr::apply_band_permutation(f, swap, hsr::PermDirection::Forward);
  for (std::size_t p = 0; p < 9; ++p) {
    CHECK(sw.data[p * 2 + 0] == f.data[p * 2 + 1]);
    CHECK(sw.data[p * 2 + 1] == f.data[p * 2 + 0]);
  }
  CHECK(hsr::apply_band_permutation(sw, swap, hsr::PermDirection::Inverse)
            .data == f.data);

  CHECK_THROWS_AS(hsr::apply_band_permutation(f, Permutation::identity(3),
                                              hsr::PermDirection::Forward),
                  hsr::ShapeError);
}
