// Command-line toolchain: cube synthesis, degradation, super-resolution
// inference, evaluation, kernel benchmarking and self-test.
//
// Exit codes: 0 success, 1 usage, 2 I/O, 3 validation, 4 selftest
// failure.
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hsr/hsr.hpp"
#include "json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitValidation = 3;
constexpr int kExitSelftest = 4;

struct SynthArgs {
  std::size_t h = 64, w = 64, b = 16;
  std::string profile = "smooth";
  std::uint64_t seed = 0;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  hsr::Rng rng(a.seed);
  const hsr::HsiCube cube =
      hsr::synth_cube(rng, a.h, a.w, a.b, hsr::parse_profile(a.profile));
  hsr::save_cube(a.out, cube);
  std::cout << "synth: wrote " << a.out << " (" << a.h << "x" << a.w << "x"
            << a.b << ", profile=" << a.profile << ", seed=" << a.seed
            << ")\n";
  return kExitOk;
}

struct DegradeArgs {
  std::string in, out;
  std::size_t scale = 4;
};

int run_degrade(const DegradeArgs& a) {
  const hsr::HsiCube hr = hsr::load_cube(a.in);
  const hsr::HsiCube lr = hsr::degrade(hr, a.scale);
  hsr::save_cube(a.out, lr);
  std::cout << "degrade: " << hr.dim(0) << "x" << hr.dim(1) << "x"
            << hr.dim(2) << " -> " << lr.dim(0) << "x" << lr.dim(1) << "x"
            << lr.dim(2) << " (x1/" << a.scale << ")\n";
  return kExitOk;
}

struct SrArgs {
  std::string in, out;
  std::string weights;
  bool random_weights = false;
  std::uint64_t seed = 0;
  std::size_t scale = 4;
  std::size_t channels = 64, groups = 4, cssm = 2;
  std::size_t win_h = 4, win_w = 4, win_c = 8;
  std::size_t state = 8;
  std::size_t ca_reduction = 0;
  std::string ablate = "none";
  std::string save_weights_path;
};

int run_sr(const SrArgs& a) {
  const hsr::HsiCube lr = hsr::load_cube(a.in);

  hsr::ModelConfig cfg;
  cfg.channels = a.channels;
  cfg.groups = a.groups;
  cfg.cssm_per_group = a.cssm;
  cfg.win_h = a.win_h;
  cfg.win_w = a.win_w;
  cfg.win_c = a.win_c;
  cfg.scale = a.scale;
  cfg.state_size = a.state;
  cfg.ca_reduction = a.ca_reduction;
  cfg.bands = lr.dim(2);
  cfg.seed = a.seed;
  if (a.ablate == "no-lssp")
    cfg.lssp_enabled = false;
  else if (a.ablate == "no-gsrm")
    cfg.gsrm_enabled = false;
  else if (a.ablate == "no-lssp-no-gsrm")
    cfg.lssp_enabled = cfg.gsrm_enabled = false;
  else if (a.ablate != "none")
    throw hsr::ValueError("unknown ablation: " + a.ablate);

  hsr::ModelWeights weights;
  if (a.random_weights) {
    weights = hsr::init_weights(cfg);
  } else {
    if (a.weights.empty())
      throw hsr::ValueError("either --weights or --random-weights required");
    auto [file_cfg, w] = hsr::load_weights(a.weights);
    if (file_cfg.bands != lr.dim(2) || file_cfg.scale != a.scale)
      throw hsr::WeightConfigMismatch(
          "weight file config (" + file_cfg.describe() +
          ") incompatible with request (" + cfg.describe() + ")");
    cfg = file_cfg;
    weights = std::move(w);
  }

  hsr::ForwardTiming timing;
  const hsr::Tensor sr = hsr::model_forward(lr, cfg, weights, &timing);

  hsr::Tensor clipped = sr;
  for (double& v : clipped.data) v = std::clamp(v, 0.0, 1.0);
  hsr::save_cube(a.out, clipped);
  if (!a.save_weights_path.empty())
    hsr::save_weights(a.save_weights_path, cfg, weights);

  std::cout << "sr: " << lr.dim(0) << "x" << lr.dim(1) << "x" << lr.dim(2)
            << " -> " << sr.dim(0) << "x" << sr.dim(1) << "x" << sr.dim(2)
            << " (x" << cfg.scale << ")\n";
  std::printf("timing\tshallow\t%.4f s\n", timing.shallow_s);
  std::printf("timing\tbody\t%.4f s\n", timing.body_s);
  std::printf("timing\tupsample\t%.4f s\n", timing.upsample_s);
  std::printf("timing\tbicubic-skip\t%.4f s\n", timing.skip_s);
  return kExitOk;
}

struct EvalArgs {
  std::string sr, hr;
  std::size_t scale = 4;
  bool json = false;
  std::string error_map;
};

int run_eval(const EvalArgs& a) {
  const hsr::HsiCube sr = hsr::load_cube(a.sr);
  const hsr::HsiCube hr = hsr::load_cube(a.hr);
  const hsr::MetricReport r = hsr::evaluate(sr, hr, double(a.scale));

  if (a.json) {
    nlohmann::json j{{"psnr", r.psnr},
                     {"ssim", r.ssim},
                     {"sam", r.sam},
                     {"cc", r.cc},
                     {"rmse", r.rmse},
                     {"ergas", r.ergas},
                     {"cc_skipped_bands", r.cc_skipped_bands},
                     {"ergas_floored_bands", r.ergas_floored_bands}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << r.to_text();
  }

  if (!a.error_map.empty()) {
    // per-pixel mean absolute error across bands
    const std::size_t H = sr.dim(0), W = sr.dim(1), B = sr.dim(2);
    hsr::HsiCube em({H, W, 1});
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        double s = 0.0;
        for (std::size_t b = 0; b < B; ++b)
          s += std::fabs(sr.at3(y, x, b) - hr.at3(y, x, b));
        em.at3(y, x, 0) = std::clamp(s / double(B), 0.0, 1.0);
      }
    hsr::save_cube(a.error_map, em);
  }
  return kExitOk;
}

struct BenchArgs {
  std::vector<std::size_t> lengths{16384, 32768};
  std::size_t state = 16;
  std::size_t reps = 5;
};

int run_bench(const BenchArgs& a) {
  if (a.reps < 2)
    std::cout << "warning: a single repetition is noise-dominated; "
                 "consider --reps 5 or more\n";
  std::cout << "kind\tlength\tmedian_s\tdoubling_ratio\n";
  double prev = 0.0;
  bool flagged = false;
  for (std::size_t i = 0; i < a.lengths.size(); ++i) {
    const hsr::BenchPoint p =
        hsr::bench_selective_scan(a.lengths[i], a.state, a.reps);
    double ratio = 0.0;
    if (i > 0 && a.lengths[i] == 2 * a.lengths[i - 1] && prev > 0.0)
      ratio = p.median_seconds / prev;
    std::printf("scan\t%zu\t%.6f\t%s\n", p.length, p.median_seconds,
                ratio > 0.0 ? std::to_string(ratio).c_str() : "-");
    if (ratio > 0.0 && (ratio < 1.6 || ratio > 2.6)) flagged = true;
    prev = p.median_seconds;
  }
  // quadratic contrast on the two smallest lengths
  if (a.lengths.size() >= 2) {
    const std::size_t l0 = a.lengths[0];
    const hsr::BenchPoint q0 = hsr::bench_quadratic_reference(l0, 3);
    const hsr::BenchPoint q1 = hsr::bench_quadratic_reference(2 * l0, 3);
    std::printf("quadratic\t%zu\t%.6f\t-\n", q0.length, q0.median_seconds);
    std::printf("quadratic\t%zu\t%.6f\t%.3f\n", q1.length, q1.median_seconds,
                q1.median_seconds / q0.median_seconds);
  }
  if (flagged)
    std::cout << "note: scan doubling ratio outside [1.6, 2.6]; machine "
                 "load may be skewing the measurement\n";
  return kExitOk;
}

struct SelftestArgs {
  bool quick = false;
  double tolerance_scale = 1.0;  // hidden debug knob
};

bool suite_scan_equivalence(const SelftestArgs& a, std::string& detail) {
  const std::size_t cases = a.quick ? 20 : 100;
  const double tol = 1e-9 * a.tolerance_scale;
  hsr::Rng rng(101);
  double worst = 0.0;
  for (std::size_t t = 0; t < cases; ++t) {
    const std::size_t n = 1 + rng.next_u64() % 8;
    const std::size_t len = 2 + rng.next_u64() % 128;
    hsr::SsmParams p;
    for (std::size_t i = 0; i < n; ++i) {
      p.a_diag.push_back(rng.uniform(-4.0, -0.1));
      p.b.push_back(rng.uniform(-1.0, 1.0));
      p.c.push_back(rng.uniform(-1.0, 1.0));
    }
    p.d = rng.uniform(-1.0, 1.0);
    const hsr::DiscretizedSsm d = hsr::discretize(p, rng.uniform(0.01, 1.0));
    std::vector<double> x(len);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const auto yr = hsr::scan_recurrent(d, x);
    const auto yc = hsr::scan_convolutional(d, x);
    for (std::size_t k = 0; k < len; ++k) {
      const double rel = std::fabs(yr[k] - yc[k]) /
                         std::max(1.0, std::fabs(yr[k]));
      worst = std::max(worst, rel);
    }
  }
  detail = "max relative deviation " + std::to_string(worst);
  return worst < tol;
}

bool suite_layout_bijection(const SelftestArgs& a, std::string& detail) {
  const std::size_t cases = a.quick ? 30 : 200;
  hsr::Rng rng(202);
  for (std::size_t t = 0; t < cases; ++t) {
    const std::size_t H = 1 + rng.next_u64() % 9,
                      W = 1 + rng.next_u64() % 9,
                      C = 1 + rng.next_u64() % 12;
    hsr::Tensor f({H, W, C});
    for (double& v : f.data) v = rng.uniform(0.0, 1.0);

    const hsr::Tensor back =
        hsr::bssc_unflatten(hsr::bssc_flatten(f), H, W, C);
    if (back.data != f.data) {
      detail = "bssc roundtrip failed";
      return false;
    }
    hsr::LayoutConfig cfg{1 + rng.next_u64() % 4, 1 + rng.next_u64() % 4,
                          1 + rng.next_u64() % 4};
    const hsr::Tensor merged =
        hsr::lssp_merge(hsr::lssp_partition(f, cfg), cfg, H, W, C);
    if (merged.data != f.data) {
      detail = "lssp roundtrip failed";
      return false;
    }
    if (C >= 2 && H * W >= 2) {
      const hsr::Permutation p = hsr::gsrm_order(f);
      const hsr::Tensor rt = hsr::apply_band_permutation(
          hsr::apply_band_permutation(f, p, hsr::PermDirection::Forward), p,
          hsr::PermDirection::Inverse);
      if (rt.data != f.data) {
        detail = "gsrm permutation roundtrip failed";
        return false;
      }
    }
  }
  detail = std::to_string(cases) + " random draws";
  return true;
}

bool suite_gradient_check(const SelftestArgs& a, std::string& detail) {
  const std::size_t points = a.quick ? 10 : 40;
  const double tol = 1e-4 * a.tolerance_scale;
  hsr::Rng rng(303);
  double worst = 0.0;
  for (std::size_t t = 0; t < points; ++t) {
    hsr::Tensor sr({4, 4, 3}), hr({4, 4, 3});
    for (double& v : sr.data) v = rng.uniform(0.1, 0.9);
    for (double& v : hr.data) v = rng.uniform(0.1, 0.9);
    const hsr::LossResult res = hsr::total_loss(sr, hr);
    const std::size_t i = rng.next_u64() % sr.size();
    const double h = 1e-6;
    hsr::Tensor plus = sr, minus = sr;
    plus.data[i] += h;
    minus.data[i] -= h;
    const double fd = (hsr::total_loss(plus, hr).value -
                       hsr::total_loss(minus, hr).value) /
                      (2.0 * h);
    const double rel = std::fabs(fd - res.grad[i]) /
                       std::max(1e-8, std::fabs(fd));
    worst = std::max(worst, rel);
  }
  detail = "max relative gradient error " + std::to_string(worst);
  return worst < tol;
}

bool suite_metric_oracle(const SelftestArgs& a, std::string& detail) {
  const double tol = 1e-9 * a.tolerance_scale;
  hsr::Rng rng(404);
  hsr::Tensor x({16, 16, 4});
  for (double& v : x.data) v = rng.uniform(0.0, 1.0);

  // closed-form anchors
  hsr::Tensor off = x;
  for (double& v : off.data) v += 0.1;
  if (std::fabs(hsr::psnr(off, x) - 20.0) > tol) {
    detail = "uniform 0.1 offset PSNR != 20 dB";
    return false;
  }
  if (std::fabs(hsr::ssim(x, x) - 1.0) > tol ||
      std::fabs(hsr::sam_metric(x, x)) > tol ||
      std::fabs(hsr::ergas(x, x, 4.0)) > tol ||
      std::fabs(hsr::rmse(x, x)) > tol ||
      std::fabs(hsr::cc(x, x) - 1.0) > tol) {
    detail = "identical-cube anchor failed";
    return false;
  }
  // rmse^2 * count == sse
  double sse = 0.0;
  hsr::Tensor y({16, 16, 4});
  for (double& v : y.data) v = rng.uniform(0.0, 1.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.data[i] - y.data[i];
    sse += d * d;
  }
  const double r = hsr::rmse(x, y);
  if (std::fabs(r * r * double(x.size()) - sse) > 1e-10 * a.tolerance_scale) {
    detail = "rmse/sse identity failed";
    return false;
  }
  detail = "anchors and identities hold";
  return true;
}

int run_selftest(const SelftestArgs& a) {
  struct Suite {
    const char* name;
    bool (*fn)(const SelftestArgs&, std::string&);
  };
  const Suite suites[] = {
      {"scan-equivalence", suite_scan_equivalence},
      {"layout-bijection", suite_layout_bijection},
      {"gradient-check", suite_gradient_check},
      {"metric-oracle", suite_metric_oracle},
  };
  bool ok = true;
  for (const Suite& s : suites) {
    std::string detail;
    const bool pass = s.fn(a, detail);
    std::cout << (pass ? "PASS" : "FAIL") << "  " << s.name << "  ("
              << detail << ")\n";
    ok = ok && pass;
  }
  return ok ? kExitOk : kExitSelftest;
}

struct ImportArgs {
  std::string in, out;
  std::size_t h = 0, w = 0, b = 0;
  bool f64 = false;
};

int run_import(const ImportArgs& a) {
  double nmin = 0.0, nmax = 1.0;
  const hsr::HsiCube cube =
      hsr::import_raw(a.in, a.h, a.w, a.b, a.f64, &nmin, &nmax);
  hsr::save_cube(a.out, cube, nmin, nmax);
  std::cout << "import: " << a.h << "x" << a.w << "x" << a.b
            << ", normalized from [" << nmin << ", " << nmax << "]\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HSRMamba-style hyperspectral super-resolution toolchain"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic cube");
  s->set_help_flag("--help", "print help");
  s->add_option("--h", synth.h, "height");
  s->add_option("--w", synth.w, "width");
  s->add_option("--b", synth.b, "bands");
  s->add_option("--profile", synth.profile, "smooth|mixtures|checker");
  s->add_option("--seed", synth.seed, "rng seed");
  s->add_option("-o,--out", synth.out, "output cube")->required();

  DegradeArgs deg;
  auto* d = app.add_subcommand("degrade", "bicubic downsampling");
  d->add_option("-i,--in", deg.in, "HR cube")->required();
  d->add_option("-o,--out", deg.out, "LR cube")->required();
  d->add_option("--scale", deg.scale, "downsampling factor");

  SrArgs sr;
  auto* r = app.add_subcommand("sr", "super-resolution inference");
  r->add_option("-i,--in", sr.in, "LR cube")->required();
  r->add_option("-o,--out", sr.out, "SR cube")->required();
  r->add_option("--weights", sr.weights, "weight file");
  r->add_flag("--random-weights", sr.random_weights,
              "fresh seeded initialization instead of a weight file");
  r->add_option("--seed", sr.seed, "init seed");
  r->add_option("--scale", sr.scale, "upscale factor (power of 2)");
  r->add_option("--channels", sr.channels, "feature channels");
  r->add_option("--groups", sr.groups, "CSMG count");
  r->add_option("--cssm", sr.cssm, "CSSMs per group");
  r->add_option("--win-h", sr.win_h, "window height");
  r->add_option("--win-w", sr.win_w, "window width");
  r->add_option("--win-c", sr.win_c, "window bands");
  r->add_option("--state", sr.state, "SSM state size");
  r->add_option("--ca-reduction", sr.ca_reduction,
                "channel attention reduction (0 = auto)");
  r->add_option("--ablate", sr.ablate,
                "none|no-lssp|no-gsrm|no-lssp-no-gsrm");
  r->add_option("--save-weights", sr.save_weights_path,
                "also write the weights used");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "compare two cubes");
  e->add_option("--sr", ev.sr, "reconstructed cube")->required();
  e->add_option("--hr", ev.hr, "reference cube")->required();
  e->add_option("--scale", ev.scale, "scale factor for ERGAS");
  e->add_flag("--json", ev.json, "machine-readable output");
  e->add_option("--error-map", ev.error_map,
                "write per-pixel mean absolute error cube");

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "selective-scan timing");
  b->add_option("--lengths", be.lengths, "sequence lengths");
  b->add_option("--state", be.state, "SSM state size");
  b->add_option("--reps", be.reps, "repetitions per length");

  SelftestArgs st;
  auto* t = app.add_subcommand("selftest", "run built-in check suites");
  t->add_flag("--quick", st.quick, "reduced iteration counts");
  t->add_option("--debug-tolerance-scale", st.tolerance_scale,
                "scale all tolerances (debug)")
      ->group("");  // hidden

  ImportArgs im;
  auto* i = app.add_subcommand("import", "import a raw float dump");
  i->set_help_flag("--help", "print help");
  i->add_option("-i,--in", im.in, "raw file")->required();
  i->add_option("-o,--out", im.out, "output cube")->required();
  i->add_option("--h", im.h, "height")->required();
  i->add_option("--w", im.w, "width")->required();
  i->add_option("--b", im.b, "bands")->required();
  i->add_flag("--f64", im.f64, "64-bit samples (default 32-bit)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*s) return run_synth(synth);
    if (*d) return run_degrade(deg);
    if (*r) return run_sr(sr);
    if (*e) return run_eval(ev);
    if (*b) return run_bench(be);
    if (*t) return run_selftest(st);
    if (*i) return run_import(im);
  } catch (const hsr::WeightConfigMismatch& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const hsr::CubeRangeError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const hsr::CubeIoError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const hsr::WeightIoError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
