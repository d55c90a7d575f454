#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "doctest.h"
#include "hsr/hsio.hpp"
#include "hsr/model.hpp"
#include "hsr/quality.hpp"

using hsr::ModelConfig;
using hsr::ModelWeights;
using hsr::Rng;
using hsr::Tensor;

namespace {

// Small configuration so forwards stay fast in unit tests.
ModelConfig small_config() {
  ModelConfig c;
  c.channels = 16;
  c.groups = 2;
  c.cssm_per_group = 1;
  c.win_h = c.win_w = 4;
  c.win_c = 8;
  c.scale = 4;
  c.ca_reduction = 4;
  c.state_size = 4;
  c.bands = 8;
  c.seed = 5;
  return c;
}

Tensor random_cube(Rng& rng, std::size_t h, std::size_t w, std::size_t b) {
  Tensor t({h, w, b});
  for (double& v : t.data) v = rng.uniform(0.0, 1.0);
  return t;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("hsr_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace

TEST_CASE("model_forward: output shape scales spatially, keeps bands") {
  ModelConfig cfg = small_config();
  const ModelWeights w = hsr::init_weights(cfg);
  Rng rng(90);
  const Tensor lr = random_cube(rng, 8, 8, 8);

  cfg.scale = 4;
  const Tensor s4 = hsr::model_forward(lr, cfg, w);
  CHECK(s4.shape == std::vector<std::size_t>{32, 32, 8});
}

TEST_CASE("model_forward: scale 8 needs a third upsample stage") {
  ModelConfig cfg = small_config();
  cfg.scale = 8;
  const ModelWeights w = hsr::init_weights(cfg);
  Rng rng(91);
  const Tensor lr = random_cube(rng, 4, 4, 8);
  const Tensor out = hsr::model_forward(lr, cfg, w);
  CHECK(out.shape == std::vector<std::size_t>{32, 32, 8});
}

TEST_CASE("model_forward: deterministic for a fixed seed") {
  const ModelConfig cfg = small_config();
  Rng rng(92);
  const Tensor lr = random_cube(rng, 8, 8, 8);
  const Tensor a = hsr::model_forward(lr, cfg, hsr::init_weights(cfg));
  const Tensor b = hsr::model_forward(lr, cfg, hsr::init_weights(cfg));
  CHECK(a.data == b.data);
}

TEST_CASE("model_forward: zeroed weights reduce to the bicubic skip") {
  const ModelConfig cfg = small_config();
  ModelWeights w = hsr::init_weights(cfg);
  hsr::zero_weights(w);
  Rng rng(93);
  const Tensor lr = random_cube(rng, 8, 8, 8);
  const Tensor out = hsr::model_forward(lr, cfg, w);
  const Tensor skip = hsr::bicubic_resize(lr, 4.0);
  CHECK(out.data == skip.data);
}

TEST_CASE("model_forward: fresh weights stay near the bicubic baseline") {
  const ModelConfig cfg = small_config();
  const ModelWeights w = hsr::init_weights(cfg);
  Rng rng(94);
  const hsr::HsiCube hr =
      hsr::synth_cube(rng, 32, 32, 8, hsr::SynthProfile::SmoothGaussians);
  const Tensor lr = hsr::degrade(hr, 4);
  const Tensor sr = hsr::model_forward(lr, cfg, w);
  const double p_model = hsr::psnr(sr, hr);
  const double p_bicubic = hsr::psnr(hsr::bicubic_resize(lr, 4.0), hr);
  CHECK(p_model >= p_bicubic - 3.0);
}

TEST_CASE("init_weights: different seeds give different weights") {
  ModelConfig a = small_config(), b = small_config();
  b.seed = a.seed + 1;
  const ModelWeights wa = hsr::init_weights(a);
  const ModelWeights wb = hsr::init_weights(b);
  CHECK(wa.shallow.kernel.data != wb.shallow.kernel.data);
  // same seed reproduces bit-identically
  CHECK(hsr::init_weights(a).shallow.kernel.data == wa.shallow.kernel.data);
}

TEST_CASE("parameter_count: frozen for the reference configuration") {
  ModelConfig cfg;
  cfg.channels = 64;
  cfg.groups = 4;
  cfg.cssm_per_group = 2;
  cfg.bands = 48;
  cfg.scale = 4;
  cfg.state_size = 8;
  CHECK(hsr::parameter_count(hsr::init_weights(cfg)) == 815472u);
}

TEST_CASE("weights: save/load roundtrip is float-exact and byte-stable") {
  TempDir tmp;
  const ModelConfig cfg = small_config();
  ModelWeights w = hsr::init_weights(cfg);
  // perturb so the stored values differ from what init would recreate
  w.body.kernel.data[0] = 0.123456;
  const std::string p1 = tmp.file("w1.hsrw"), p2 = tmp.file("w2.hsrw");
  hsr::save_weights(p1, cfg, w);

  auto [cfg2, w2] = hsr::load_weights(p1);
  CHECK(cfg2 == cfg);
  // values round through f32
  CHECK(w2.body.kernel.data[0] == double(float(0.123456)));

  hsr::save_weights(p2, cfg2, w2);
  std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
  const std::string ba((std::istreambuf_iterator<char>(a)),
                       std::istreambuf_iterator<char>());
  const std::string bb((std::istreambuf_iterator<char>(b)),
                       std::istreambuf_iterator<char>());
  CHECK(ba == bb);
}

TEST_CASE("weights: corruption is caught by the checksum") {
  TempDir tmp;
  const ModelConfig cfg = small_config();
  const std::string path = tmp.file("w.hsrw");
  hsr::save_weights(path, cfg, hsr::init_weights(cfg));

  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(100);
  char c;
  f.seekg(100);
  f.get(c);
  c = char(c ^ 0x40);
  f.seekp(100);
  f.put(c);
  f.close();
  CHECK_THROWS_AS(hsr::load_weights(path), hsr::WeightChecksumError);
}

TEST_CASE("weights: truncated and wrong-magic files are rejected") {
  TempDir tmp;
  const std::string path = tmp.file("bad.hsrw");
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOPE";
  }
  CHECK_THROWS_AS(hsr::load_weights(path), hsr::WeightIoError);
  CHECK_THROWS_AS(hsr::load_weights(tmp.file("missing.hsrw")),
                  hsr::WeightIoError);
}

TEST_CASE("weights: config mismatch names both configurations") {
  TempDir tmp;
  const ModelConfig cfg = small_config();
  const std::string path = tmp.file("w.hsrw");
  hsr::save_weights(path, cfg, hsr::init_weights(cfg));

  ModelConfig other = cfg;
  other.channels = 32;
  try {
    hsr::load_weights_checked(path, other);
    FAIL("expected WeightConfigMismatch");
  } catch (const hsr::WeightConfigMismatch& e) {
    const std::string msg = e.what();
    CHECK(msg.find("C=16") != std::string::npos);
    CHECK(msg.find("C=32") != std::string::npos);
  }
}

TEST_CASE("model_forward: ablation variants are pairwise distinct") {
  ModelConfig base = small_config();
  Rng rng(95);
  const Tensor lr = random_cube(rng, 8, 8, 8);

  std::vector<Tensor> outs;
  for (int i = 0; i < 4; ++i) {
    ModelConfig cfg = base;
    cfg.lssp_enabled = (i & 1) == 0;
    cfg.gsrm_enabled = (i & 2) == 0;
    outs.push_back(hsr::model_forward(lr, cfg, hsr::init_weights(cfg)));
  }
  for (std::size_t i = 0; i < outs.size(); ++i)
    for (std::size_t j = i + 1; j < outs.size(); ++j)
      CHECK(max_abs_diff(outs[i], outs[j]) > 1e-9);
}

TEST_CASE("model_forward: rejects mismatched band counts") {
  const ModelConfig cfg = small_config();
  const ModelWeights w = hsr::init_weights(cfg);
  CHECK_THROWS_AS(hsr::model_forward(Tensor({4, 4, 5}), cfg, w),
                  hsr::ShapeError);
}

TEST_CASE("model config: validation and helper rules") {
  ModelConfig c = small_config();
  CHECK(c.upsample_stages() == 2);
  c.scale = 8;
  CHECK(c.upsample_stages() == 3);
  c.scale = 3;
  CHECK_THROWS_AS(c.validate(), hsr::ShapeError);

  ModelConfig d;
  d.channels = 64;
  CHECK(d.effective_ca_reduction() == 16);
  d.channels = 24;
  CHECK(d.effective_ca_reduction() == 4);
  d.ca_reduction = 8;
  CHECK(d.effective_ca_reduction() == 8);
}
