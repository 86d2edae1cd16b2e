// logseg: segment log point clouds, generate synthetic suites, evaluate and
// ablate. Exit status: 0 success, 1 data error, 2 usage error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "logseg/baseline.hpp"
#include "logseg/cloud_io.hpp"
#include "logseg/error.hpp"
#include "logseg/gradcheck.hpp"
#include "logseg/metrics.hpp"
#include "logseg/preprocess.hpp"
#include "logseg/records.hpp"
#include "logseg/segmenter.hpp"
#include "logseg/synthgen.hpp"

namespace fs = std::filesystem;
using namespace logseg;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;
constexpr int kCentrelineSamples = 101;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

LossWeights parse_loss_weights(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--loss-weights: '" + item + "' is not a number");
    }
  }
  if (v.size() != 6) throw UsageError("--loss-weights needs six comma-separated values f,r,s,p,n,w");
  LossWeights w{v[0], v[1], v[2], v[3], v[4], v[5]};
  try {
    w.validate();
  } catch (const Error& e) {
    throw UsageError(std::string("--loss-weights: ") + e.what());
  }
  return w;
}

fs::path ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::IoError, "cannot create directory '" + dir.string() + "'");
  return dir;
}

// Config precedence: explicit flag > config file > built-in default.
struct RunSettings {
  LossWeights weights;
  OptimizerConfig optimizer;
  bool pca_align = true;
  ScaleMode scale_mode = ScaleMode::SharedRadial;

  json to_json() const {
    return {{"loss_weights", logseg::to_json(weights)},
            {"optimizer", logseg::to_json(optimizer)},
            {"pca_align", pca_align},
            {"scale_mode", scale_mode == ScaleMode::SharedRadial ? "shared_radial" : "single_global"}};
  }
};

struct SegmentFlags {
  std::string config_path;
  std::string loss_weights;
  std::optional<int> degree, k, max_steps;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold, learning_rate;
  bool no_pca_align = false;
  std::string scale_mode;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON file with loss_weights / optimizer / pca_align / scale_mode")
        ->check(CLI::ExistingFile);
    cmd->add_option("--loss-weights", loss_weights, "f,r,s,p,n,w coefficients");
    cmd->add_option("--degree", degree, "centreline polynomial degree")->check(CLI::Range(0, kMaxCurveDegree));
    cmd->add_option("--k", k, "neighborhood size")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "subsampling seed");
    cmd->add_option("--threshold", threshold, "inlier weight threshold")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--lr", learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--max-steps", max_steps, "optimizer step limit")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--no-pca-align", no_pca_align, "skip principal-axis alignment");
    cmd->add_option("--scale-mode", scale_mode, "shared_radial | single_global")
        ->check(CLI::IsMember({"shared_radial", "single_global"}));
  }

  RunSettings resolve() const {
    RunSettings s;
    if (!config_path.empty()) {
      const json j = parse_json(read_file(config_path), config_path);
      if (!j.is_object()) throw Error(ErrorKind::ParseError, config_path + ": expected a JSON object");
      for (const auto& [key, value] : j.items()) {
        if (key == "loss_weights") {
          s.weights = loss_weights_from_json(value, s.weights);
        } else if (key == "optimizer") {
          s.optimizer = optimizer_config_from_json(value, s.optimizer);
        } else if (key == "pca_align") {
          if (!value.is_boolean()) throw Error(ErrorKind::ParseError, "pca_align must be a boolean");
          s.pca_align = value.get<bool>();
        } else if (key == "scale_mode") {
          s.scale_mode = value == "single_global" ? ScaleMode::SingleGlobal : ScaleMode::SharedRadial;
          if (value != "single_global" && value != "shared_radial") {
            throw Error(ErrorKind::ParseError, "unknown scale_mode in " + config_path);
          }
        } else {
          throw Error(ErrorKind::ParseError, config_path + ": unknown key '" + key + "'");
        }
      }
    }
    if (!loss_weights.empty()) s.weights = parse_loss_weights(loss_weights);
    if (degree) s.optimizer.degree = *degree;
    if (k) s.optimizer.k = *k;
    if (seed) s.optimizer.seed = *seed;
    if (threshold) s.optimizer.threshold = *threshold;
    if (learning_rate) s.optimizer.learning_rate = *learning_rate;
    if (max_steps) s.optimizer.max_steps = *max_steps;
    if (no_pca_align) s.pca_align = false;
    if (!scale_mode.empty()) s.scale_mode = scale_mode == "single_global" ? ScaleMode::SingleGlobal : ScaleMode::SharedRadial;
    try {
      s.weights.validate();
      s.optimizer.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    return s;
  }
};

struct BaselineFlags {
  std::string config_path;
  std::optional<double> eps, slice_width, dist_threshold;
  std::optional<int> min_pts;
  std::string cluster;
  bool no_pca_align = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON baseline config")->check(CLI::ExistingFile);
    cmd->add_option("--eps", eps, "DBSCAN radius")->check(CLI::PositiveNumber);
    cmd->add_option("--min-pts", min_pts, "DBSCAN core count, self included")->check(CLI::PositiveNumber);
    cmd->add_option("--slice-width", slice_width, "slice width along x")->check(CLI::PositiveNumber);
    cmd->add_option("--dist-threshold", dist_threshold, "max |distance - radius|")->check(CLI::NonNegativeNumber);
    cmd->add_option("--cluster", cluster, "largest | highest_core_density")
        ->check(CLI::IsMember({"largest", "highest_core_density"}));
    cmd->add_flag("--no-pca-align", no_pca_align, "skip principal-axis alignment");
  }

  BaselineConfig resolve() const {
    BaselineConfig c;
    if (!config_path.empty()) c = baseline_config_from_json(parse_json(read_file(config_path), config_path), c);
    if (eps) c.eps = *eps;
    if (min_pts) c.min_pts = *min_pts;
    if (slice_width) c.slice_width = *slice_width;
    if (dist_threshold) c.dist_threshold = *dist_threshold;
    if (!cluster.empty()) c.choice = cluster == "largest" ? ClusterChoice::Largest : ClusterChoice::HighestCoreDensity;
    return c;
  }
};

// A suite directory holds labeled clouds, plus an optional suite.json manifest
// ({"clouds": [{"file", "id", "group"}]}) that fixes order and groups.
std::vector<SuiteCloud> load_suite(const fs::path& dir, bool align, ScaleMode mode) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::IoError, "'" + dir.string() + "' is not a directory");
  struct Entry {
    fs::path file;
    std::string id, group;
  };
  std::vector<Entry> entries;
  const fs::path manifest = dir / "suite.json";
  if (fs::exists(manifest)) {
    const json j = parse_json(read_file(manifest), manifest.string());
    if (!j.contains("clouds") || !j["clouds"].is_array()) {
      throw Error(ErrorKind::ParseError, manifest.string() + ": missing 'clouds' array");
    }
    for (const json& c : j["clouds"]) {
      if (!c.contains("file")) throw Error(ErrorKind::MissingProperty, manifest.string() + ": entry without 'file'");
      const fs::path file = dir / c["file"].get<std::string>();
      entries.push_back({file, c.value("id", file.stem().string()), c.value("group", std::string("all"))});
    }
  } else {
    for (const auto& f : fs::directory_iterator(dir)) {
      const auto ext = f.path().extension();
      if (ext == ".ply" || ext == ".xyz") entries.push_back({f.path(), f.path().stem().string(), "all"});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.file < b.file; });
  }
  if (entries.empty()) throw Error(ErrorKind::IoError, "no clouds in '" + dir.string() + "'");
  std::vector<SuiteCloud> suite;
  for (const Entry& e : entries) {
    PointCloud raw = read_cloud(e.file);
    if (!raw.labels) throw Error(ErrorKind::MissingProperty, e.file.string() + " has no label column");
    NormalizedCloud nc = prepare(raw, align, mode);
    nc.cloud.id = e.id;
    suite.push_back({e.id, e.group, std::move(nc.cloud)});
  }
  return suite;
}

std::string metrics_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "cloud,group,tp,fp,fn,tn,precision,recall,iou\n";
  for (const auto& c : report.per_cloud) {
    const Metrics& m = c.metrics;
    os << c.id << ',' << c.group << ',' << m.tp << ',' << m.fp << ',' << m.fn << ',' << m.tn << ','
       << format_double(m.precision) << ',' << format_double(m.recall) << ',' << format_double(m.iou) << '\n';
  }
  return os.str();
}

std::string history_csv(const std::vector<LossBreakdown>& history) {
  std::ostringstream os;
  os << "step,fit,rho,sigma,plane,normal,weights,total\n";
  for (std::size_t s = 0; s < history.size(); ++s) {
    const LossBreakdown& b = history[s];
    const bool final_row = s + 1 == history.size();
    os << (final_row ? std::string("final") : std::to_string(s));
    for (double v : {b.fit, b.rho, b.sigma, b.plane, b.normal, b.weights, b.total}) os << ',' << format_double(v);
    os << '\n';
  }
  return os.str();
}

int cmd_segment(const std::string& input, const std::string& out_dir, const SegmentFlags& flags) {
  const RunSettings settings = flags.resolve();
  const PointCloud raw = read_cloud(input);
  const NormalizedCloud nc = prepare(raw, settings.pca_align, settings.scale_mode);
  const SegmentationResult result = segment(nc.cloud, settings.weights, settings.optimizer);

  const fs::path dir = ensure_dir(out_dir);
  const std::string stem = fs::path(input).stem().string();
  write_cloud(raw, dir / (stem + "_segmented.ply"), &result.inlier_mask);

  // Centreline polyline sampled along the inliers' x extent, in input coordinates.
  std::ostringstream poly;
  std::size_t inliers = result.inlier_count();
  if (inliers > static_cast<std::size_t>(settings.optimizer.degree)) {
    const CurveFit curve = extract_centreline(result, nc.cloud, settings.optimizer.degree);
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < nc.cloud.size(); ++i) {
      if (!result.inlier_mask[i]) continue;
      const double x = nc.cloud.points[i].x;
      lo = first ? x : std::min(lo, x);
      hi = first ? x : std::max(hi, x);
      first = false;
    }
    for (int s = 0; s < kCentrelineSamples; ++s) {
      const double x = lo + (hi - lo) * s / (kCentrelineSamples - 1);
      const Vec2 yz = curve(x);
      const Vec3 p = denormalize(Vec3{x, yz.y, yz.z}, nc.record);
      poly << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z) << '\n';
    }
  }
  write_file_atomic(dir / (stem + "_centreline.xyz"), poly.str());
  write_file_atomic(dir / (stem + "_normalization.json"), to_json(nc.record).dump(2) + "\n");
  write_file_atomic(dir / (stem + "_loss_history.csv"), history_csv(result.loss_history));

  json summary = settings.to_json();
  summary["input"] = input;
  summary["points"] = raw.size();
  summary["inliers"] = inliers;
  summary["steps_used"] = result.steps_used;
  summary["converged"] = result.converged;
  summary["degenerate_spectrum"] = result.degenerate_spectrum;
  summary["final_loss"] = result.loss_history.back().total;
  if (raw.labels) summary["metrics"] = to_json(evaluate(result.inlier_mask, *raw.labels));
  write_file_atomic(dir / (stem + "_summary.json"), summary.dump(2) + "\n");
  std::printf("%s: %zu of %zu points kept after %d steps, final loss %.6f\n", stem.c_str(), inliers, raw.size(),
              result.steps_used, result.loss_history.back().total);
  return 0;
}

int cmd_baseline(const std::string& input, const std::string& out_dir, const BaselineFlags& flags) {
  const BaselineConfig config = flags.resolve();
  const PointCloud raw = read_cloud(input);
  const NormalizedCloud nc = prepare(raw, !flags.no_pca_align);
  const BaselineResult result = baseline_segment(nc.cloud, config);
  const fs::path dir = ensure_dir(out_dir);
  const std::string stem = fs::path(input).stem().string();
  write_cloud(raw, dir / (stem + "_baseline.ply"), &result.inlier_mask);
  const auto inliers = std::count(result.inlier_mask.begin(), result.inlier_mask.end(), true);
  json summary = {{"config", to_json(config)},
                  {"normalization", to_json(nc.record)},
                  {"points", raw.size()},
                  {"inliers", inliers},
                  {"slices", result.diagnostics.slices},
                  {"empty_slices", result.diagnostics.empty_slices},
                  {"degenerate_slices", result.diagnostics.degenerate_slices}};
  if (raw.labels) summary["metrics"] = to_json(evaluate(result.inlier_mask, *raw.labels));
  write_file_atomic(dir / (stem + "_baseline.json"), summary.dump(2) + "\n");
  std::printf("%s: %td of %zu points kept by the baseline\n", stem.c_str(), inliers, raw.size());
  return 0;
}

int cmd_synth(const std::string& spec_path, bool default_suite_flag, std::size_t n_surface, const std::string& out) {
  if (default_suite_flag) {
    const fs::path dir = ensure_dir(out);
    json manifest = {{"clouds", json::array()}};
    for (const SuiteEntry& e : default_suite(n_surface)) {
      const SyntheticLog log = generate(e.spec);
      const std::string file = e.spec.id + ".ply";
      write_cloud(log.cloud, dir / file);
      manifest["clouds"].push_back({{"file", file},
                                    {"id", e.spec.id},
                                    {"group", to_string(e.outliers)},
                                    {"ellipticity", e.spec.ellipticity},
                                    {"tapered", e.tapered},
                                    {"curved", e.curved},
                                    {"spec", to_json(e.spec)}});
    }
    write_file_atomic(dir / "suite.json", manifest.dump(2) + "\n");
    std::printf("wrote %zu clouds to %s\n", manifest["clouds"].size(), dir.string().c_str());
    return 0;
  }
  if (spec_path.empty()) throw UsageError("synth needs a spec file or --default-suite");
  const SyntheticLogSpec spec = synthetic_spec_from_json(parse_json(read_file(spec_path), spec_path));
  const SyntheticLog log = generate(spec);
  write_cloud(log.cloud, out);
  std::printf("wrote %zu points (%zu surface) to %s\n", log.cloud.size(), spec.n_surface, out.c_str());
  return 0;
}

void emit_report(const EvalReport& report, const std::string& out) {
  if (out.empty()) {
    std::cout << metrics_csv(report);
    std::printf("mean precision %.6f recall %.6f iou %.6f over %zu clouds\n", report.overall.precision,
                report.overall.recall, report.overall.iou, report.overall.clouds);
    return;
  }
  const fs::path path(out);
  if (path.extension() == ".json") {
    write_file_atomic(path, to_json(report).dump(2) + "\n");
  } else {
    write_file_atomic(path, metrics_csv(report));
    fs::path summary = path;
    summary.replace_extension(".json");
    write_file_atomic(summary, to_json(report).dump(2) + "\n");
  }
}

int cmd_eval(const std::vector<std::string>& files, const std::string& suite_dir, const std::string& method,
             bool micro, const std::string& out, const SegmentFlags& seg_flags, const BaselineFlags& base_flags) {
  const Averaging mode = micro ? Averaging::Micro : Averaging::Macro;
  if (!suite_dir.empty()) {
    if (!files.empty()) throw UsageError("eval takes either <pred> <gt> or --suite, not both");
    const RunSettings settings = seg_flags.resolve();
    const BaselineConfig base = base_flags.resolve();
    std::vector<CloudMetrics> rows;
    for (const SuiteCloud& c : load_suite(suite_dir, settings.pca_align, settings.scale_mode)) {
      const std::vector<bool> mask = method == "baseline" ? baseline_segment(c.cloud, base).inlier_mask
                                                          : segment(c.cloud, settings.weights, settings.optimizer).inlier_mask;
      rows.push_back({c.id, c.group, evaluate(mask, *c.cloud.labels)});
    }
    emit_report(make_report(std::move(rows), mode), out);
    return 0;
  }
  if (files.size() != 2) throw UsageError("eval needs <pred> <gt> or --suite <dir>");
  const PointCloud pred = read_cloud(files[0]);
  const PointCloud gt = read_cloud(files[1]);
  if (!pred.labels) throw Error(ErrorKind::MissingProperty, files[0] + " has no label column");
  if (!gt.labels) throw Error(ErrorKind::MissingProperty, files[1] + " has no label column");
  emit_report(make_report({{gt.id, "all", evaluate(*pred.labels, *gt.labels)}}, mode), out);
  return 0;
}

int cmd_ablate(const std::string& suite_dir, const std::string& out, bool micro, const SegmentFlags& flags) {
  const RunSettings settings = flags.resolve();
  const auto suite = load_suite(suite_dir, settings.pca_align, settings.scale_mode);
  const auto rows = run_ablation(suite, settings.weights, settings.optimizer, micro ? Averaging::Micro : Averaging::Macro);
  write_file_atomic(out, ablation_csv(rows));
  fs::path summary(out);
  summary.replace_extension(".json");
  write_file_atomic(summary, json{{"rows", to_json(rows)}, {"settings", settings.to_json()}}.dump(2) + "\n");
  std::cout << ablation_table(rows);
  return 0;
}

int cmd_gradcheck(const GradcheckConfig& config) {
  const GradcheckReport r = run_gradcheck(config);
  for (Term t : kAllTerms) {
    const double e = r.term_error[static_cast<std::size_t>(t)];
    std::printf("%-10s max relative error %.3e %s\n", to_string(t), e, e < 1e-4 ? "ok" : "FAIL");
  }
  std::printf("%-10s max relative error %.3e %s\n", "total", r.total_error, r.total_error < 1e-4 ? "ok" : "FAIL");
  std::printf("%d trials run, %d excluded (%zu degenerate neighborhoods), %.2f s\n", r.trials_run, r.trials_excluded,
              r.degenerate_neighborhoods, r.seconds);
  return r.passed() ? 0 : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised log point cloud segmentation"};
  app.require_subcommand(1);

  std::string input, out;
  SegmentFlags seg_flags;
  BaselineFlags base_flags;

  auto* segment_cmd = app.add_subcommand("segment", "segment one cloud");
  segment_cmd->add_option("input", input, "PLY or XYZ cloud")->required()->check(CLI::ExistingFile);
  segment_cmd->add_option("--out", out, "output directory")->required();
  seg_flags.attach(segment_cmd);

  std::string spec_path;
  bool default_suite_flag = false;
  std::size_t n_surface = 5000;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic labeled cloud");
  synth_cmd->add_option("spec", spec_path, "JSON spec")->check(CLI::ExistingFile);
  synth_cmd->add_flag("--default-suite", default_suite_flag, "write the 20-cloud benchmark into --out (a directory)");
  synth_cmd->add_option("--n-surface", n_surface, "surface points per suite cloud")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--out", out, "output cloud file, or directory with --default-suite")->required();

  std::vector<std::string> eval_files;
  std::string suite_dir, method = "proposed";
  bool micro = false;
  auto* eval_cmd = app.add_subcommand("eval", "compare predicted labels against ground truth");
  eval_cmd->add_option("files", eval_files, "<pred> <gt> labeled clouds")->check(CLI::ExistingFile);
  eval_cmd->add_option("--suite", suite_dir, "segment and score every labeled cloud in a directory");
  eval_cmd->add_option("--method", method, "proposed | baseline (with --suite)")
      ->check(CLI::IsMember({"proposed", "baseline"}));
  eval_cmd->add_flag("--micro", micro, "pool confusion counts instead of averaging per cloud");
  eval_cmd->add_option("--out", out, "CSV (plus JSON summary) or JSON report path");
  seg_flags.attach(eval_cmd);
  auto* eval_base = eval_cmd->add_option_group("baseline");
  eval_base->add_option("--eps", base_flags.eps)->check(CLI::PositiveNumber);
  eval_base->add_option("--min-pts", base_flags.min_pts)->check(CLI::PositiveNumber);
  eval_base->add_option("--slice-width", base_flags.slice_width)->check(CLI::PositiveNumber);
  eval_base->add_option("--dist-threshold", base_flags.dist_threshold)->check(CLI::NonNegativeNumber);

  auto* ablate_cmd = app.add_subcommand("ablate", "on/off grid over the optional loss terms");
  ablate_cmd->add_option("--suite", suite_dir, "directory of labeled clouds")->required();
  ablate_cmd->add_option("--out", out, "per-cloud CSV (a JSON summary is written beside it)")->required();
  ablate_cmd->add_flag("--micro", micro, "pool confusion counts instead of averaging per cloud");
  seg_flags.attach(ablate_cmd);

  auto* baseline_cmd = app.add_subcommand("baseline", "slice / cluster / circle-fit segmentation");
  baseline_cmd->add_option("input", input, "PLY or XYZ cloud")->required()->check(CLI::ExistingFile);
  baseline_cmd->add_option("--out", out, "output directory")->required();
  base_flags.attach(baseline_cmd);

  GradcheckConfig gc;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
  gradcheck_cmd->set_help_flag("--help", "print this help message and exit");  // frees -h for --h
  gradcheck_cmd->add_option("--n", gc.points, "points per trial")->check(CLI::Range(8, 100000));
  gradcheck_cmd->add_option("--k", gc.k, "neighborhood size")->check(CLI::PositiveNumber);
  gradcheck_cmd->add_option("--trials", gc.trials, "random configurations")->check(CLI::PositiveNumber);
  gradcheck_cmd->add_option("--h", gc.step, "central difference step")->check(CLI::PositiveNumber);
  gradcheck_cmd->add_option("--degree", gc.degree, "curve degree")->check(CLI::Range(0, kMaxCurveDegree));
  gradcheck_cmd->add_option("--seed", gc.seed, "trial seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*segment_cmd) return cmd_segment(input, out, seg_flags);
    if (*synth_cmd) return cmd_synth(spec_path, default_suite_flag, n_surface, out);
    if (*eval_cmd) return cmd_eval(eval_files, suite_dir, method, micro, out, seg_flags, base_flags);
    if (*ablate_cmd) return cmd_ablate(suite_dir, out, micro, seg_flags);
    if (*baseline_cmd) return cmd_baseline(input, out, base_flags);
    if (*gradcheck_cmd) return cmd_gradcheck(gc);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
