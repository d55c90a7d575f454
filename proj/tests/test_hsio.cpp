#include <cstdint>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "doctest.h"
#include "hsr/hsio.hpp"
#include "oracles.hpp"

using hsr::HsiCube;
using hsr::Rng;
using hsr::Tensor;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("hsr_io_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

HsiCube random_cube(Rng& rng, std::size_t h, std::size_t w, std::size_t b) {
  HsiCube t({h, w, b});
  for (double& v : t.data) v = rng.uniform(0.0, 1.0);
  return t;
}

}  // namespace

TEST_CASE("cube io: save/load roundtrip is bit-identical") {
  TempDir tmp;
  Rng rng(100);
  const HsiCube cube = random_cube(rng, 7, 5, 3);
  const std::string path = tmp.file("c.hscb");
  hsr::save_cube(path, cube, 0.1, 0.9);
  double nmin = 0.0, nmax = 0.0;
  const HsiCube back = hsr::load_cube(path, &nmin, &nmax);
  CHECK(back.shape == cube.shape);
  CHECK(back.data == cube.data);
  CHECK(nmin == 0.1);
  CHECK(nmax == 0.9);
}

TEST_CASE("cube io: out-of-range samples refuse to save") {
  TempDir tmp;
  HsiCube cube({2, 2, 1});
  cube.data[0] = 1.5;
  CHECK_THROWS_AS(hsr::save_cube(tmp.file("bad.hscb"), cube),
                  hsr::CubeRangeError);
}

TEST_CASE("cube io: truncation reported with byte counts") {
  TempDir tmp;
  Rng rng(101);
  const std::string path = tmp.file("c.hscb");
  hsr::save_cube(path, random_cube(rng, 4, 4, 2));
  const auto full = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full - 10);
  try {
    hsr::load_cube(path);
    FAIL("expected CubeTruncatedError");
  } catch (const hsr::CubeTruncatedError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(std::to_string(full)) != std::string::npos);
    CHECK(msg.find(std::to_string(full - 10)) != std::string::npos);
  }
}

TEST_CASE("cube io: flipped payload bit fails the checksum") {
  TempDir tmp;
  Rng rng(102);
  const std::string path = tmp.file("c.hscb");
  hsr::save_cube(path, random_cube(rng, 4, 4, 2));
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(60);
  char c;
  f.get(c);
  f.seekp(60);
  f.put(char(c ^ 0x01));
  f.close();
  CHECK_THROWS_AS(hsr::load_cube(path), hsr::CubeChecksumError);
}

TEST_CASE("cube io: bad magic and zero-extent headers rejected") {
  TempDir tmp;
  {
    std::ofstream f(tmp.file("magic.hscb"), std::ios::binary);
    f << "XXXXrest-of-the-file-is-long-enough-to-pass-length-checks";
  }
  CHECK_THROWS_AS(hsr::load_cube(tmp.file("magic.hscb")), hsr::CubeMagicError);

  // hand-built header declaring zero bands
  {
    hsr::detail::ByteWriter w;
    w.bytes = {'H', 'S', 'C', 'B'};
    w.u32(1);      // version
    w.u32(2);      // H
    w.u32(2);      // W
    w.u32(0);      // B = 0
    w.u8(0);       // dtype
    w.f64(0.0);
    w.f64(1.0);
    w.u32(hsr::detail::crc32(w.bytes.data() + 4, w.bytes.size() - 4));
    std::ofstream f(tmp.file("zero.hscb"), std::ios::binary);
    f.write(reinterpret_cast<const char*>(w.bytes.data()),
            std::streamsize(w.bytes.size()));
  }
  CHECK_THROWS_AS(hsr::load_cube(tmp.file("zero.hscb")), hsr::CubeIoError);

  CHECK_THROWS_AS(hsr::load_cube(tmp.file("missing.hscb")), hsr::CubeIoError);
}

TEST_CASE("synth_cube: deterministic, in range, profile-shaped") {
  Rng a(7), b(7);
  const HsiCube c1 = hsr::synth_cube(a, 16, 16, 6,
                                     hsr::SynthProfile::SmoothGaussians);
  const HsiCube c2 = hsr::synth_cube(b, 16, 16, 6,
                                     hsr::SynthProfile::SmoothGaussians);
  CHECK(c1.data == c2.data);
  for (double v : c1.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  // smooth profile: neighboring pixels change slowly
  double max_step = 0.0;
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x + 1 < 16; ++x)
      max_step = std::max(max_step, std::fabs(c1.at3(y, x + 1, 0) -
                                              c1.at3(y, x, 0)));
  CHECK(max_step < 0.35);
}

TEST_CASE("synth_cube: mixture bands in one material group correlate") {
  Rng rng(8);
  const HsiCube c = hsr::synth_cube(rng, 24, 24, 16,
                                    hsr::SynthProfile::BandCorrelatedMixtures);
  // bands 0 and 1 share the dominant material
  CHECK(oracle::pearson(c, 0, 1) > 0.9);
}

TEST_CASE("synth_cube: checker profile has two dominant levels") {
  Rng rng(9);
  const HsiCube c = hsr::synth_cube(rng, 16, 16, 4,
                                    hsr::SynthProfile::CheckerEdges);
  for (double v : c.data) CHECK((v < 0.1 || v > 0.9));
}

TEST_CASE("parse_profile: names map and unknowns throw") {
  CHECK(hsr::parse_profile("smooth") == hsr::SynthProfile::SmoothGaussians);
  CHECK(hsr::parse_profile("mixtures") ==
        hsr::SynthProfile::BandCorrelatedMixtures);
  CHECK(hsr::parse_profile("checker") == hsr::SynthProfile::CheckerEdges);
  CHECK_THROWS_AS(hsr::parse_profile("nope"), hsr::ValueError);
}

TEST_CASE("degrade: shapes, constants, and bicubic delegation") {
  Rng rng(10);
  const HsiCube hr = hsr::synth_cube(rng, 32, 32, 4,
                                     hsr::SynthProfile::SmoothGaussians);
  const HsiCube lr = hsr::degrade(hr, 4);
  CHECK(lr.shape == std::vector<std::size_t>{8, 8, 4});

  HsiCube flat({8, 8, 2});
  for (double& v : flat.data) v = 0.25;
  const HsiCube fl = hsr::degrade(flat, 2);
  for (double v : fl.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-9));

  // interior values match a plain bicubic resize (clipping aside)
  const Tensor ref = hsr::bicubic_resize(hr, 0.25);
  for (std::size_t i = 0; i < lr.size(); ++i)
    CHECK(lr.data[i] ==
          doctest::Approx(std::clamp(ref.data[i], 0.0, 1.0)).epsilon(1e-12));

  CHECK_THROWS_AS(hsr::degrade(HsiCube({10, 10, 2}), 4), hsr::ShapeError);
}

TEST_CASE("extract_patches: counts and content") {
  Rng rng(11);
  const HsiCube cube = random_cube(rng, 64, 64, 2);
  CHECK(hsr::extract_patches(cube, 32, 32).size() == 4);
  CHECK(hsr::extract_patches(cube, 32, 16).size() == 9);

  const auto ps = hsr::extract_patches(cube, 32, 32);
  // second patch starts at column 32
  CHECK(ps[1].at3(0, 0, 0) == cube.at3(0, 32, 0));
  // last patch bottom-right corner matches the cube's
  CHECK(ps[3].at3(31, 31, 1) == cube.at3(63, 63, 1));
}

TEST_CASE("import_raw: f32 and f64 payloads normalize into [0,1]") {
  TempDir tmp;
  const std::string p32 = tmp.file("raw32.bin"), p64 = tmp.file("raw64.bin");
  // band-sequential 2x2x2, values 10..17
  {
    hsr::detail::ByteWriter w;
    for (int i = 0; i < 8; ++i) w.f32(float(10 + i));
    std::ofstream f(p32, std::ios::binary);
    f.write(reinterpret_cast<const char*>(w.bytes.data()), 32);
  }
  double nmin = 0.0, nmax = 0.0;
  const HsiCube c32 = hsr::import_raw(p32, 2, 2, 2, false, &nmin, &nmax);
  CHECK(nmin == 10.0);
  CHECK(nmax == 17.0);
  CHECK(c32.at3(0, 0, 0) == 0.0);
  CHECK(c32.at3(1, 1, 1) == 1.0);
  // band-sequential order: band 0 fills the first four samples
  CHECK(c32.at3(0, 1, 0) == doctest::Approx(1.0 / 7.0).epsilon(1e-7));

  {
    hsr::detail::ByteWriter w;
    for (int i = 0; i < 8; ++i) w.f64(double(10 + i));
    std::ofstream f(p64, std::ios::binary);
    f.write(reinterpret_cast<const char*>(w.bytes.data()), 64);
  }
  const HsiCube c64 = hsr::import_raw(p64, 2, 2, 2, true);
  CHECK(c64.data == c32.data);

  CHECK_THROWS_AS(hsr::import_raw(p32, 2, 2, 3, false),
                  hsr::CubeTruncatedError);
}
