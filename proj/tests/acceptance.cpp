// Acceptance suite: one PASS/FAIL line per criterion. Exit status counts every
// criterion except the ones marked informational.
#include "pirec/checkpoint.hpp"
#include "pirec/evaluator.hpp"
#include "pirec/image.hpp"
#include "pirec/losses.hpp"
#include "pirec/preproc.hpp"
#include "pirec/service.hpp"
#include "pirec/trainer.hpp"
#include "support/numeric.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace pirec;
using pirec::testing::numeric_gradient;
using pirec::testing::random_tensor;
using pirec::testing::relative_error;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kLossTol = 1e-6;
constexpr double kLossBudgetSec = 10.0;
constexpr double kGradTol = 1e-3;
constexpr double kGradBudgetSec = 60.0;
constexpr double kKmeansSlack = 0.01;
constexpr double kMaskCap = 0.7;
constexpr int kMaskDraws = 10000;
constexpr double kDropoutRate = 0.08, kDropoutTol = 0.005;
constexpr double kMmdZeroTol = 1e-12, kMmdSingletonTol = 1e-9, kFidTol = 1e-6;
constexpr double kWinFraction = 0.70;
constexpr double kRefineRatio = 1.10;
constexpr double kHcDegradationRatio = 0.5;
constexpr double kServiceBudgetSec = 30.0;

// Desk-scale run.
constexpr int kDeskImages = 2000;
constexpr int kDeskSize = 64;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Ledger {
 public:
  void report(const std::string& name, const Outcome& o, bool counted = true) {
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << (counted ? "" : " [informational]")
              << std::endl;
    if (counted && !o.pass) ++failures_;
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// Collects named checks; the first few failures end up in the detail line.
struct Checks {
  int total = 0;
  std::vector<std::string> failed;
  double worst = 0.0;

  void near(const std::string& what, double got, double want, double tol) {
    ++total;
    const double err = std::abs(got - want);
    worst = std::max(worst, err);
    if (!(err <= tol)) failed.push_back(what + " got " + fmt("%.9g", got) + " want " + fmt("%.9g", want));
  }
  void that(const std::string& what, bool ok) {
    ++total;
    if (!ok) failed.push_back(what);
  }
  std::string summary() const {
    std::ostringstream s;
    s << total - static_cast<int>(failed.size()) << "/" << total << " checks";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, failed.size()); ++i) s << "; " << failed[i];
    return s.str();
  }
};

Tensor<double> filled(int c, int h, int w, double v) { return Tensor<double>(c, h, w, v); }

FeatureStack<double> stack_of(std::initializer_list<Tensor<double>> maps) {
  FeatureStack<double> s;
  s.layers.assign(maps.begin(), maps.end());
  return s;
}

Outcome loss_fixed_points() {
  Stopwatch clock;
  Checks c;
  Rng rng(101);

  // per-pixel
  const Tensor<double> gt = filled(1, 4, 4, 1.0);
  Tensor<double> half(1, 4, 4);
  for (int i = 0; i < 8; ++i) half.data()[i] = 1.0;
  c.near("per_pixel half mask", per_pixel_loss(filled(1, 4, 4, 0.0), gt, half).value, 1.0, kLossTol);
  c.near("per_pixel fixed point", per_pixel_loss(apply_mask(gt, half), gt, half).value, 0.0, kLossTol);
  const Tensor<double> x = random_tensor(3, 6, 6, rng, 0.1, 1.0);
  Tensor<double> shifted = x;
  shifted.array() += 0.1;
  c.near("per_pixel offset", per_pixel_loss(shifted, x, filled(1, 6, 6, 1.0)).value, 0.1, kLossTol);

  // LSGAN
  auto grid = [](double v) { return filled(1, 3, 3, v); };
  c.near("lsgan_d fixed point", lsgan_d_loss(grid(1), grid(0)).value, 0.0, kLossTol);
  c.near("lsgan_d (0,1)", lsgan_d_loss(grid(0), grid(1)).value, 1.0, kLossTol);
  c.near("lsgan_d (.5,.5)", lsgan_d_loss(grid(0.5), grid(0.5)).value, 0.25, kLossTol);
  c.near("lsgan_g fixed point", lsgan_g_loss(grid(1)).value, 0.0, kLossTol);
  c.near("lsgan_g 0", lsgan_g_loss(grid(0)).value, 0.5, kLossTol);
  c.near("lsgan_g .5", lsgan_g_loss(grid(0.5)).value, 0.125, kLossTol);

  // feature
  const auto zero = stack_of({filled(1, 2, 2, 0.0)});
  c.near("feature fixed point", feature_loss(zero, zero).value, 0.0, kLossTol);
  c.near("feature unit diffs", feature_loss(zero, stack_of({filled(1, 2, 2, 1.0)})).value, 1.0, kLossTol);
  c.near("feature layer mean",
         feature_loss(stack_of({filled(2, 3, 3, 0.0), filled(4, 2, 2, 0.0)}),
                      stack_of({filled(2, 3, 3, 0.2), filled(4, 2, 2, -0.4)}))
             .value,
         0.3, kLossTol);

  // gram
  c.that("gram of zeros is zero", gram_matrix(filled(3, 4, 4, 0.0)).isZero(0.0));
  for (int s : {1, 5, 16}) c.near("gram constant " + std::to_string(s), gram_matrix(filled(1, s, s, 1.0))(0, 0), 1.0, kLossTol);
  const Tensor<double> f = random_tensor(5, 4, 6, rng);
  const RowMatrix<double> g = gram_matrix(f);
  c.that("gram symmetric", (g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
  c.that("gram psd", Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues().minCoeff() >= -1e-8);

  // style
  const auto one = stack_of({filled(1, 3, 3, 1.0)});
  c.near("style fixed point", style_loss(one, one).value, 0.0, kLossTol);
  c.near("style 1 vs 2", style_loss(one, stack_of({filled(1, 3, 3, 2.0)})).value, 3.0, kLossTol);
  {
    const Tensor<double> m = random_tensor(4, 3, 3, rng), other = random_tensor(4, 3, 3, rng);
    const int perm[4] = {1, 0, 3, 2};
    Tensor<double> mp = Tensor<double>::like(m);
    for (int ch = 0; ch < 4; ++ch) mp.matrix().row(ch) = m.matrix().row(perm[ch]);
    double brute = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double gp = 0.0, go = 0.0;
        for (int p = 0; p < 9; ++p) {
          gp += mp.matrix()(i, p) * mp.matrix()(j, p);
          go += other.matrix()(i, p) * other.matrix()(j, p);
        }
        brute += std::abs(gp / 36.0 - go / 36.0);
      }
    c.near("style permuted gram", style_loss(stack_of({other}), stack_of({mp})).value, brute / 16.0, kLossTol);
  }

  // joint
  const LossComponents ones{1, 1, 1, 1};
  c.near("total phase 1", total_generator_loss(ones, PhaseConfig::defaults(Phase::Imitation)), 152.01, kLossTol);
  c.near("total phase 3", total_generator_loss(ones, PhaseConfig::defaults(Phase::Refinement)), 4.0, kLossTol);
  c.near("total zero", total_generator_loss({}, PhaseConfig::defaults(Phase::Imitation)), 0.0, kLossTol);

  const double t = clock.seconds();
  c.that("runtime " + fmt("%.2f s", t), t < kLossBudgetSec);
  return {c.failed.empty(), c.summary() + ", max abs err " + fmt("%.2e", c.worst) + ", " + fmt("%.2f s", t)};
}

// Away from zero so |.| is differentiable at the probe points.
Tensor<double> random_nonzero(int ch, int h, int w, Rng& rng) {
  Tensor<double> t = random_tensor(ch, h, w, rng, 0.2, 1.0);
  for (Eigen::Index i = 0; i < t.size(); ++i)
    if (rng.bernoulli(0.5)) t.data()[i] = -t.data()[i];
  return t;
}

Outcome gradient_suite() {
  Stopwatch clock;
  Rng rng(202);
  std::vector<std::pair<std::string, double>> errs;

  {
    const Tensor<double> gt = random_nonzero(3, 8, 8, rng), fake = random_nonzero(3, 8, 8, rng);
    Tensor<double> mask(1, 8, 8);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.bernoulli(0.6) ? 1.0 : 0.0;
    auto fn = [&](const Tensor<double>& v) { return per_pixel_loss(v, gt, mask).value; };
    errs.emplace_back("per_pixel", relative_error(per_pixel_loss(fake, gt, mask).grad, numeric_gradient(fn, fake)));
  }
  {
    DiscriminatorConfig cfg;
    cfg.base_width = 4;
    cfg.strided_layers = 1;
    Discriminator<double> d(cfg);
    const Tensor<double> fake = random_tensor(3, 8, 8, rng);
    const Tensor<double> g = d.backward(lsgan_g_loss(d.forward(fake)).grad);
    auto fn = [&](const Tensor<double>& v) { return lsgan_g_loss(d.infer(v)).value; };
    errs.emplace_back("lsgan_g", relative_error(g, numeric_gradient(fn, fake)));
  }
  PerceptualExtractor<double> ex(ExtractorConfig::small_random(3));
  const FeatureStack<double> gt_stack = ex.extract(random_tensor(3, 8, 8, rng));
  using StackFn = std::function<StackLoss<double>(const FeatureStack<double>&, const FeatureStack<double>&)>;
  for (const auto& [name, loss] : {std::pair<std::string, StackFn>{"feature", feature_loss<double>},
                                   std::pair<std::string, StackFn>{"style", style_loss<double>}}) {
    const Tensor<double> fake = random_tensor(3, 8, 8, rng);
    const FeatureStack<double> fs = ex.forward(fake);
    const Tensor<double> g = ex.backward(loss(gt_stack, fs).grads);
    auto fn = [&, &loss = loss](const Tensor<double>& v) { return loss(gt_stack, ex.extract(v)).value; };
    errs.emplace_back(name, relative_error(g, numeric_gradient(fn, fake)));
  }

  const double t = clock.seconds();
  bool ok = t < kGradBudgetSec;
  std::ostringstream s;
  for (const auto& [name, e] : errs) {
    ok = ok && e < kGradTol;
    s << name << " " << fmt("%.1e", e) << ", ";
  }
  s << "tol " << kGradTol << ", " << fmt("%.2f s", t);
  return {ok, s.str()};
}

Outcome preprocessing_oracles() {
  Checks c;
  std::ostringstream extra;

  // K-means vs exhaustive partition.
  {
    Rng rng(303);
    int bad = 0, trials = 0;
    for (int n : {4, 6, 9, 12})
      for (int k = 1; k <= 3; ++k)
        for (int t = 0; t < 12; ++t, ++trials) {
          Eigen::MatrixXd pts(n, 3);
          for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = rng.uniform();
          KMeansOptions opts;
          opts.clusters = k;
          opts.seed = rng.next();
          if (kmeans(pts, opts).inertia > (1.0 + kKmeansSlack) * testing::brute_force_inertia(pts, k) + 1e-12) ++bad;
        }
    c.that("kmeans within 1% (" + std::to_string(bad) + " misses)", bad == 0);
    extra << "kmeans " << trials - bad << "/" << trials;
  }

  // Canny vs OpenCV on vertical and horizontal steps.
  {
    int mismatches = 0, images = 0;
    for (double sigma : {1.0, 2.0, 3.0})
      for (bool transpose : {false, true}) {
        Tensor<double> img = testing::vertical_step(40, 48, 21);
        if (transpose) img = testing::transpose_spatial(img);
        PreprocParams p;
        p.canny_sigma = sigma;
        p.edge_dropout_prob = 0.0;
        p.thresholds.automatic = false;
        p.thresholds.low = 0.1;
        p.thresholds.high = 0.2;
        const auto e = extract_edge(img, p, EdgeMode::Inference);
        const cv::Mat ref = testing::reference_canny(img, sigma, p.thresholds.low, p.thresholds.high);
        for (int y = 0; y < img.height(); ++y)
          for (int x = 0; x < img.width(); ++x)
            mismatches += (e.pixels(0, y, x) == 1.0) != (ref.at<unsigned char>(y, x) != 0);
        c.that("single line", e.pixels.matrix().sum() == 40);  // the step spans 40 pixels either way
        ++images;
      }
    c.that("canny matches reference (" + std::to_string(mismatches) + " px differ)", mismatches == 0);
    extra << ", canny " << images << " steps " << mismatches << " px off";
  }

  // Mask cap.
  {
    double worst = 0.0;
    for (int s = 0; s < kMaskDraws; ++s)
      worst = std::max(worst, generate_mask<float>(kDeskSize, kDeskSize, kMaskCap, static_cast<std::uint64_t>(s)).hidden_fraction());
    c.that("mask hidden fraction " + fmt("%.4f", worst), worst <= kMaskCap);
    extra << ", mask max " << fmt("%.4f", worst);
  }

  // Edge dropout rate.
  {
    EdgeMap<float> e{Tensor<float>(1, 1000, 1000, 1.0f)};
    drop_edge_pixels(e, kDropoutRate, 42);
    const double rate = 1.0 - e.pixels.matrix().cast<double>().sum() / 1e6;
    c.that("dropout rate " + fmt("%.5f", rate), std::abs(rate - kDropoutRate) <= kDropoutTol);
    extra << ", dropout " << fmt("%.5f", rate);
  }
  return {c.failed.empty(), extra.str() + (c.failed.empty() ? "" : "; " + c.summary())};
}

Outcome metric_cases() {
  using Mat = FeatureMatrix<double>;
  Checks c;
  Rng rng(404);
  auto random_rows = [&](int n, int d, double shift) {
    Mat m(n, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() + shift;
    return m;
  };

  const Mat a = random_rows(20, 6, 0.0);
  c.near("mmd identical h=1.5", kernel_mmd(a, a, 1.5), 0.0, kMmdZeroTol);
  c.near("mmd identical median", kernel_mmd(a, a), 0.0, kMmdZeroTol);

  Mat u(1, 4), v(1, 4);
  u << 0.3, -1.2, 2.0, 0.7;
  v << 1.1, 0.4, -0.5, 0.7;
  const double d2 = (u - v).squaredNorm();
  for (double h : {0.5, 1.0, 2.5})
    c.near("mmd singleton h=" + fmt("%.1f", h), kernel_mmd(u, v, h), 2.0 - 2.0 * std::exp(-d2 / (2 * h * h)), kMmdSingletonTol);

  const Mat x = random_rows(60, 1, 0.8), y = random_rows(45, 1, -0.3) * 1.7;
  auto moments = [](const Mat& m) {
    const double mu = m.mean();
    return std::pair{mu, std::sqrt((m.array() - mu).square().sum() / static_cast<double>(m.rows() - 1))};
  };
  const auto [m1, s1] = moments(x);
  const auto [m2, s2] = moments(y);
  c.near("fid univariate", fid(x, y).value, (m1 - m2) * (m1 - m2) + s1 * s1 + s2 * s2 - 2 * s1 * s2, kFidTol);

  const Mat base = random_rows(40, 5, 0.0);
  Eigen::RowVectorXd delta(5);
  delta << 0.5, -1.0, 2.0, 0.0, 0.25;
  c.near("fid mean shift", fid(base, Mat(base.rowwise() + delta)).value, delta.squaredNorm(), kFidTol);

  return {c.failed.empty(), c.summary() + ", max abs err " + fmt("%.2e", c.worst)};
}

// --- desk-scale training -----------------------------------------------------

// CPU-sized model: one downsampling stage and no instance norm (which discards
// the absolute colors the color domain carries; see README).
TrainerConfig desk_config(bool hc) {
  TrainerConfig c;
  c.image_size = kDeskSize;
  c.generator.base_width = 16;
  c.generator.residual_blocks = 4;
  c.generator.downsampling_stages = 1;
  c.generator.instance_norm = false;
  c.discriminator.base_width = 16;
  c.batch_size = 8;
  c.adam_g.lr = 2e-4;
  c.adam_d.lr = 2e-5;
  c.hc_enabled = hc;
  c.convergence_gate = true;
  c.phases[0].max_epochs = 4;
  c.phases[1].max_epochs = 30;
  c.phases[2].max_epochs = 8;
  c.seed = 7;
  return c;
}

struct DeskRun {
  TrainResult result;
  std::array<ModelCheckpoint, 3> checkpoints;
};

DeskRun train_or_reuse(const DatasetIndex& ds, bool hc, const std::string& dir) {
  TrainerHooks hooks;
  const std::string tag = hc ? "hc-on" : "hc-off";
  hooks.on_epoch = [tag](const PhaseState& s) {
    std::cerr << "  [" << tag << "] phase " << to_int(s.phase) << " epoch " << s.epoch << " val "
              << s.loss_history.back() << (s.converged ? " (done)" : "") << std::endl;
  };
  DeskRun run;
  run.result = train_all(ds, desk_config(hc), dir, true, hooks);
  for (std::size_t k = 0; k < 3; ++k) run.checkpoints[k] = load_model_checkpoint(run.result.checkpoints[k]);
  return run;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

AccuracyResult score(const ModelCheckpoint& ck, const std::vector<EvalPair>& pairs, Phase phase,
                     const PerceptualExtractor<float>& ex) {
  const auto g = ck.generator;
  return accuracy_score(pairs, [&](const Tensor<float>& e, const Tensor<float>& s) { return reconstruct(*g, e, s, phase); }, ex);
}

void desk_scale(Ledger& ledger, const std::string& artifacts) {
  Stopwatch clock;
  const std::string images = (fs::path(artifacts) / "images").string();
  const bool have_images = fs::exists(images) && std::distance(fs::directory_iterator(images), fs::directory_iterator{}) == kDeskImages;
  if (!have_images) {
    fs::remove_all(images);
    write_synthetic_shapes(images, {kDeskImages, kDeskSize, 2024});
  }
  const DatasetIndex ds = ingest(images, {"desk-synthetic", kDeskSize, 0.05, (fs::path(artifacts) / "manifest.json").string()});
  std::cerr << "desk-scale: " << ds.items.size() << " images, training or reusing runs in " << artifacts << std::endl;
  const DeskRun on = train_or_reuse(ds, true, (fs::path(artifacts) / "hc_on").string());
  const DeskRun off = train_or_reuse(ds, false, (fs::path(artifacts) / "hc_off").string());

  // (a) weights carried across phase boundaries
  {
    Checks c;
    for (const DeskRun* r : {&on, &off}) {
      c.that("1->2", r->result.start_hashes[1] == r->result.end_hashes[0]);
      c.that("2->3", r->result.start_hashes[2] == r->result.end_hashes[1]);
      for (std::size_t k = 0; k < 3; ++k) c.that("checkpoint hash", r->checkpoints[k].weights_hash == r->result.end_hashes[k]);
      c.that("trained", r->result.end_hashes[0] != r->result.start_hashes[0]);
    }
    ledger.report("desk-scale (a) phase boundaries carry weights", {c.failed.empty(), c.summary()});
  }

  const PerceptualExtractor<float> ex(ExtractorConfig::small_random());
  const PreprocParams ref = TrainerConfig::reference_params();
  const auto pairs = make_eval_pairs(ds, ref, kDeskSize, 0, 0);

  // (b) phase-2 outputs vs the color domain alone
  const AccuracyResult p2 = score(on.checkpoints[1], pairs, Phase::Generating, ex);
  {
    int wins = 0;
    std::vector<double> base;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      base.push_back(perceptual_distance(pairs[i].x_gt, pairs[i].style, ex));
      wins += p2.distances[i] < base.back();
    }
    const double frac = static_cast<double>(wins) / static_cast<double>(pairs.size());
    ledger.report("desk-scale (b) phase-2 beats color-domain baseline",
                  {frac >= kWinFraction, std::to_string(wins) + "/" + std::to_string(pairs.size()) + " held-out wins (" +
                                             fmt("%.1f%%", 100 * frac) + ", need " + fmt("%.0f%%", 100 * kWinFraction) +
                                             "); score " + fmt("%.5f", p2.mean) + " vs baseline " + fmt("%.5f", mean_of(base))});
  }

  // (c) refinement stays close to phase 2
  {
    const AccuracyResult p3 = score(on.checkpoints[2], pairs, Phase::Refinement, ex);
    const double ratio = p3.mean / p2.mean;
    ledger.report("desk-scale (c) refinement within 1.10x of phase 2",
                  {ratio <= kRefineRatio, "phase-3 " + fmt("%.5f", p3.mean) + " / phase-2 " + fmt("%.5f", p2.mean) +
                                              " = " + fmt("%.3f", ratio)});
  }

  // (d) robustness to shifted preprocessing hyperparameters
  {
    auto degradation = [&](const DeskRun& r) {
      const ModelCheckpoint& ck = r.checkpoints[2];
      const double at_ref = score(ck, pairs, Phase::Refinement, ex).mean;
      double sum = 0.0;
      int n = 0;
      for (double ds_sigma : {-1.0, 1.0})
        for (int dc : {-1, 1}) {
          PreprocParams p = ref;
          p.canny_sigma += ds_sigma;
          p.cluster_count += dc;
          sum += score(ck, make_eval_pairs(ds, p, kDeskSize, 0, 0), Phase::Refinement, ex).mean - at_ref;
          ++n;
        }
      return std::pair{at_ref, sum / n};
    };
    const auto [ref_on, deg_on] = degradation(on);
    const auto [ref_off, deg_off] = degradation(off);
    ledger.report("desk-scale (d) HC-on degrades at most half as much as HC-off",
                  {deg_on <= kHcDegradationRatio * deg_off,
                   "mean degradation HC-on " + fmt("%+.5f", deg_on) + " (ref " + fmt("%.5f", ref_on) + "), HC-off " +
                       fmt("%+.5f", deg_off) + " (ref " + fmt("%.5f", ref_off) + ")"});
  }
  std::cerr << "desk-scale section took " << fmt("%.0f s", clock.seconds()) << std::endl;
}

// --- service -----------------------------------------------------------------

Outcome service_contract() {
  Stopwatch clock;
  Checks c;
  testing::TempDir dir("pirec-accept");
  GeneratorConfig gc;
  gc.base_width = 4;
  gc.residual_blocks = 1;
  DiscriminatorConfig dc;
  dc.base_width = 4;
  dc.strided_layers = 2;
  Generator<float> g(gc);
  Discriminator<float> d(dc);
  const std::string ckpt = dir / "toy.ckpt";
  save_model_checkpoint(ckpt, g, d, Phase::Refinement, nlohmann::json::object());
  ServiceOptions o;
  o.checkpoints = {ckpt};
  InferenceService svc(o);

  Tensor<float> edge(1, 48, 48);
  for (int i = 0; i < 48; ++i) edge(0, i, 20) = edge(0, 30, i) = 1.0f;
  Tensor<float> ca(3, 48, 48, 0.3f), cb(3, 48, 48, 0.6f);
  ca.matrix().row(0).setConstant(0.9f);
  cb.matrix().row(2).setConstant(0.1f);
  const std::string e = encode_png(edge), a = encode_png(ca), b = encode_png(cb);

  for (auto mode : {InferMode::Generate, InferMode::Refine}) {
    const ReconstructRequest r{e, a, mode, ""};
    c.that(std::string("deterministic ") + infer_mode_name(mode), svc.reconstruct(r) == svc.reconstruct(r));
    const ReconstructRequest z{encode_png(Tensor<float>(1, 48, 48)), a, mode, ""};
    const Tensor<float> out = decode_image(svc.reconstruct(z));
    c.that("all-zero edge", out.shape_string() == "3x48x48" && out.matrix().allFinite());
  }

  InterpolateRequest ir;
  ir.edge_png = e;
  ir.color_a_png = a;
  ir.color_b_png = b;
  for (int steps : {2, 5, 9}) {
    ir.steps = steps;
    const auto frames = svc.interpolate(ir);
    c.that("frame count " + std::to_string(steps), static_cast<int>(frames.size()) == steps);
    if (frames.empty()) continue;
    c.that("t endpoints", frames.front().t == 0.0 && frames.back().t == 1.0);
    c.that("first frame equals color A", frames.front().png == svc.reconstruct({e, a, InferMode::Generate, ""}));
    c.that("last frame equals color B", frames.back().png == svc.reconstruct({e, b, InferMode::Generate, ""}));
  }
  const double t = clock.seconds();
  c.that("runtime " + fmt("%.2f s", t), t < kServiceBudgetSec);
  return {c.failed.empty(), c.summary() + ", " + fmt("%.2f s", t)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pirec acceptance suite"};
  std::string artifacts = "acceptance_run";
  bool skip_desk = false;
  app.add_option("--artifacts", artifacts, "Directory for the desk-scale dataset and training runs (reused when present)");
  app.add_flag("--skip-desk-scale", skip_desk, "Report the desk-scale criteria as FAIL without training");
  CLI11_PARSE(app, argc, argv);

  Ledger ledger;
  ledger.report("absolute benchmark scores (LPIPS 0.085 on edges->shoes, FID 0.015)",
                {false, "not reproducible at desk scale: full datasets, long GAN training and the exact metric "
                        "networks are unavailable; substituted by the property suite below"},
                false);
  ledger.report("loss fixed points and closed forms", loss_fixed_points());
  ledger.report("loss gradients vs central differences", gradient_suite());
  ledger.report("preprocessing oracles", preprocessing_oracles());
  ledger.report("metric analytic cases", metric_cases());
  if (skip_desk) {
    for (const char* n : {"(a)", "(b)", "(c)", "(d)"})
      ledger.report(std::string("desk-scale ") + n, {false, "skipped by --skip-desk-scale"});
  } else {
    try {
      desk_scale(ledger, artifacts);
    } catch (const std::exception& ex) {
      ledger.report("desk-scale training", {false, std::string("error: ") + ex.what()});
    }
  }
  ledger.report("service contract", service_contract());
  std::cout << (ledger.failures() == 0 ? "all counted criteria passed" : std::to_string(ledger.failures()) + " criteria failed")
            << std::endl;
  return ledger.failures() == 0 ? 0 : 1;
}
