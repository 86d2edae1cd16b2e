// Runs the seven acceptance checks and prints one PASS/FAIL line per check.
// Exit status is the number of failed checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "logseg/baseline.hpp"
#include "logseg/cloud_io.hpp"
#include "logseg/eigen_sym3.hpp"
#include "logseg/gradcheck.hpp"
#include "logseg/knn.hpp"
#include "logseg/loss.hpp"
#include "logseg/metrics.hpp"
#include "logseg/polyfit.hpp"
#include "logseg/preprocess.hpp"
#include "logseg/segmenter.hpp"
#include "logseg/synthgen.hpp"
#include "oracles.hpp"

using namespace logseg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int number, const char* name, bool pass, const std::string& detail) {
  std::printf("%s  %d. %s: %s\n", pass ? "PASS" : "FAIL", number, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void gradient_check() {
  GradcheckConfig config;
  config.points = 200;
  config.k = 16;
  config.trials = 50;
  const GradcheckReport r = run_gradcheck(config);
  const bool pass = r.passed(1e-4) && r.seconds < 60.0;
  report(1, "gradient check", pass,
         fmt("max relative error %.3e over %d trials (%d excluded, %zu degenerate neighborhoods), %.1f s",
             r.worst(), r.trials_run, r.trials_excluded, r.degenerate_neighborhoods, r.seconds));
}

void zero_loss_cone() {
  // Staggered (x, theta) grid on a cone with taper 0.1. The normal term has a
  // floor of 1 - cos(atan(0.1)) ~ 4.96e-3 because rho stays perpendicular to
  // the axis while the true normal leans; the grid has to be dense enough for
  // the sampled normals to get within 5e-3.
  PointCloud cone;
  std::vector<Vec2> rho;
  const int nx = 400, nt = 200;
  for (int a = 0; a < nx; ++a) {
    for (int b = 0; b < nt; ++b) {
      const double x = 4.0 * (a + 0.5) / nx, t = 2 * M_PI * (b + 0.5 * (a % 2)) / nt;
      const double r = 1.5 - 0.1 * x;
      cone.points.push_back({x, r * std::cos(t), r * std::sin(t)});
      rho.push_back({-r * std::cos(t), -r * std::sin(t)});
    }
  }
  const Neighborhoods nb = build_neighborhoods(cone, 256);
  const SegmentationState s{std::vector<double>(cone.size(), 10.0), rho};
  const LossBreakdown b = total_loss(cone, s, nb, LossWeights{}, 1);
  const bool pass = b.fit < 1e-8 && b.sigma < 1e-10 && b.normal < 5e-3 && b.weights < 1e-4;
  report(2, "zero-loss cone", pass,
         fmt("fit %.2e, sigma %.2e, normal %.4e, weights %.2e (%zu points, k 256)", b.fit, b.sigma, b.normal,
             b.weights, cone.size()));
}

void oracle_equivalence() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.05, 1.0);

  double poly_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int degree = trial % 4;
    std::vector<double> xs(50), w(50);
    std::vector<Vec2> yz(50);
    for (int i = 0; i < 50; ++i) {
      xs[i] = 2 * u(rng);
      w[i] = pos(rng);
      yz[i] = {u(rng), u(rng)};
    }
    const CurveFit f = fit_weighted_polynomial(xs, yz, w, degree);
#ifdef LOGSEG_HAVE_EIGEN
    const Eigen::MatrixXd ref = oracle::dense_polyfit(xs, yz, w, degree);
    for (int d = 0; d <= degree; ++d) {
      poly_err = std::max({poly_err, std::abs(f.coeffs_y[d] - ref(d, 0)), std::abs(f.coeffs_z[d] - ref(d, 1))});
    }
#else
    const auto ref = oracle::explicit_polyfit(xs, yz, w, degree);
    for (int d = 0; d <= degree; ++d) {
      poly_err = std::max({poly_err, std::abs(f.coeffs_y[d] - ref[d][0]), std::abs(f.coeffs_z[d] - ref[d][1])});
    }
#endif
  }

  double eig_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const SymMat3 m{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const auto got = eigen_decompose(m).values;
    const auto want = oracle::characteristic_roots(m);
    for (int i = 0; i < 3; ++i) eig_err = std::max(eig_err, std::abs(got[i] - want[i]));
  }

  int dbscan_mismatch = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec2> p;
    for (int i = 0; i < 150 + 20 * trial; ++i) {
      if (i % 3 == 0) {
        p.push_back({2 * u(rng), 2 * u(rng)});
      } else {
        const double t = M_PI * u(rng);
        p.push_back({std::cos(t) + 0.05 * u(rng), std::sin(t) + 0.05 * u(rng)});
      }
    }
    const double eps = 0.05 + 0.01 * trial;
    const int min_pts = 3 + trial % 4;
    dbscan_mismatch += dbscan(p, eps, min_pts) != oracle::naive_dbscan(p, eps, min_pts);
  }

  int metric_mismatch = 0;
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<bool> pred(10 + trial), truth(10 + trial);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred[i] = coin(rng);
      truth[i] = coin(rng);
    }
    const Metrics a = evaluate(pred, truth), b = oracle::enumerate_metrics(pred, truth);
    metric_mismatch += a.tp != b.tp || a.fp != b.fp || a.fn != b.fn || a.tn != b.tn || a.iou != b.iou ||
                       a.precision != b.precision || a.recall != b.recall;
  }

  const bool pass = poly_err < 1e-9 && eig_err < 1e-8 && dbscan_mismatch == 0 && metric_mismatch == 0;
  report(3, "oracle equivalence", pass,
         fmt("polyfit %.2e, eigenvalues %.2e, dbscan mismatches %d/20, metric mismatches %d/200", poly_err, eig_err,
             dbscan_mismatch, metric_mismatch));
}

struct SuiteRun {
  std::vector<SuiteEntry> entries;
  std::vector<SuiteCloud> clouds;
  double prepare_seconds = 0.0;
};

SuiteRun load_default_suite() {
  SuiteRun run;
  const auto t0 = Clock::now();
  run.entries = default_suite();
  for (const SuiteEntry& e : run.entries) {
    run.clouds.push_back({e.spec.id, to_string(e.outliers), prepare(generate(e.spec).cloud, true).cloud});
  }
  run.prepare_seconds = since(t0);
  return run;
}

void suite_quality(const SuiteRun& suite, const AblationRow& all) {
  double worst_recall = 1.0;
  std::vector<CloudMetrics> clean;
  for (std::size_t i = 0; i < all.per_cloud.size(); ++i) {
    worst_recall = std::min(worst_recall, all.per_cloud[i].metrics.recall);
    if (suite.entries[i].outliers != OutlierKind::NearSurface) clean.push_back(all.per_cloud[i]);
  }
  const double clean_iou = aggregate(clean).iou;
  const double seconds = all.seconds + suite.prepare_seconds;
  const bool pass = all.mean.iou >= 0.90 && clean_iou >= 0.95 && worst_recall >= 0.95 && seconds < 600.0;
  report(4, "synthetic suite", pass,
         fmt("mean IoU %.4f, without near-surface outliers %.4f, lowest recall %.4f, %.1f s", all.mean.iou,
             clean_iou, worst_recall, seconds));
  for (const auto& row : all.per_cloud) {
    std::printf("      %s %-12s P %.4f R %.4f IoU %.4f\n", row.id.c_str(), row.group.c_str(), row.metrics.precision,
                row.metrics.recall, row.metrics.iou);
  }
}

void ablation_trend(const std::vector<AblationRow>& rows) {
  const AblationRow& none = rows.front();
  const AblationRow& all = rows.back();
  bool all_is_max = true, singles_beat_none = true;
  for (const AblationRow& r : rows) {
    all_is_max = all_is_max && all.mean.iou >= r.mean.iou;
    const int on = r.terms.deviation + r.terms.plane + r.terms.normal;
    if (on == 1) singles_beat_none = singles_beat_none && r.mean.iou > none.mean.iou;
  }
  std::string detail;
  for (const AblationRow& r : rows) detail += fmt("%s %.4f; ", r.terms.label().c_str(), r.mean.iou);
  detail.resize(detail.size() - 2);
  report(5, "ablation trend", all_is_max && singles_beat_none, detail);
}

void baseline_gap(const SuiteRun& suite, const AblationRow& all) {
  std::vector<CloudMetrics> ours, theirs;
  for (std::size_t i = 0; i < suite.entries.size(); ++i) {
    if (suite.entries[i].spec.ellipticity != 1.3) continue;
    ours.push_back(all.per_cloud[i]);
    const SuiteCloud& c = suite.clouds[i];
    theirs.push_back({c.id, c.group, evaluate(baseline_segment(c.cloud).inlier_mask, *c.cloud.labels)});
  }
  const double a = aggregate(ours).iou, b = aggregate(theirs).iou;
  report(6, "baseline comparison", a - b >= 0.05,
         fmt("elliptic clouds: segmenter IoU %.4f, baseline IoU %.4f, gap %.4f over %zu clouds", a, b, a - b,
             ours.size()));
}

void round_trips(const SuiteRun& suite) {
  // Normalization, on a raw cloud in a shifted, rotated and scaled frame.
  const PointCloud& raw_source = generate(suite.entries[5].spec).cloud;
  PointCloud raw = raw_source;
  for (Vec3& p : raw.points) p = Vec3{250.0 * p.z + 1e3, 250.0 * p.x - 2e3, 250.0 * p.y + 40.0};
  double norm_err = 0.0;
  for (bool align : {false, true}) {
    const NormalizedCloud n = prepare(raw, align);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const Vec3 back = denormalize(n.cloud.points[i], n.record);
      norm_err = std::max(norm_err, norm(back - raw.points[i]) / std::max(1.0, norm(raw.points[i])));
    }
  }

  // Files, both formats.
  const fs::path dir = fs::temp_directory_path() / ("logseg_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  bool files_ok = true;
  for (const char* name : {"cloud.ply", "cloud.xyz"}) {
    write_cloud(raw, dir / name);
    const PointCloud back = read_cloud(dir / name);
    files_ok = files_ok && back.points == raw.points && back.labels == raw.labels;
  }
  fs::remove_all(dir);

  // Seeded determinism.
  const PointCloud& cloud = suite.clouds[1].cloud;
  const SegmentationResult a = segment(cloud, LossWeights{}, OptimizerConfig{});
  const SegmentationResult b = segment(cloud, LossWeights{}, OptimizerConfig{});
  bool same = a.final_weights == b.final_weights && a.inlier_mask == b.inlier_mask && a.centreline == b.centreline &&
              a.steps_used == b.steps_used && a.loss_history.size() == b.loss_history.size();
  for (std::size_t i = 0; same && i < a.loss_history.size(); ++i) same = a.loss_history[i].total == b.loss_history[i].total;

  report(7, "round trips", norm_err < 1e-12 && files_ok && same,
         fmt("normalize/denormalize %.2e, files %s, segment reruns %s", norm_err, files_ok ? "identical" : "differ",
             same ? "bit-identical" : "differ"));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  gradient_check();
  zero_loss_cone();
  oracle_equivalence();

  const SuiteRun suite = load_default_suite();
  const auto rows = run_ablation(suite.clouds, LossWeights{}, OptimizerConfig{});
  suite_quality(suite, rows.back());
  ablation_trend(rows);
  baseline_gap(suite, rows.back());
  round_trips(suite);

  std::printf("%d of 7 criteria failed, %.0f s\n", failures, since(t0));
  return failures;
}
