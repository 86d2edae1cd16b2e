#include "logseg/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "logseg/error.hpp"

namespace logseg {

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m{tp, fp, fn, tn};
  auto rate = [](std::size_t num, std::size_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = rate(tp, tp + fp, m.precision_undefined);
  m.recall = rate(tp, tp + fn, m.recall_undefined);
  m.iou = rate(tp, tp + fp + fn, m.iou_undefined);
  return m;
}

Metrics evaluate(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorKind::LengthMismatch, "prediction has " + std::to_string(predicted.size()) +
                                               " entries, ground truth " + std::to_string(truth.size()));
  }
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i]) {
      truth[i] ? ++tp : ++fp;
    } else {
      truth[i] ? ++fn : ++tn;
    }
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

MeanMetrics aggregate(const std::vector<CloudMetrics>& rows, Averaging mode) {
  MeanMetrics mean;
  mean.clouds = rows.size();
  if (rows.empty()) return mean;
  if (mode == Averaging::Micro) {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (const auto& r : rows) {
      tp += r.metrics.tp;
      fp += r.metrics.fp;
      fn += r.metrics.fn;
      tn += r.metrics.tn;
    }
    const Metrics pooled = metrics_from_counts(tp, fp, fn, tn);
    mean.precision = pooled.precision;
    mean.recall = pooled.recall;
    mean.iou = pooled.iou;
    return mean;
  }
  for (const auto& r : rows) {
    mean.precision += r.metrics.precision;
    mean.recall += r.metrics.recall;
    mean.iou += r.metrics.iou;
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  mean.precision *= inv;
  mean.recall *= inv;
  mean.iou *= inv;
  return mean;
}

EvalReport make_report(std::vector<CloudMetrics> rows, Averaging mode) {
  EvalReport report;
  report.overall = aggregate(rows, mode);
  std::vector<std::string> groups;
  for (const auto& r : rows) {
    if (std::find(groups.begin(), groups.end(), r.group) == groups.end()) groups.push_back(r.group);
  }
  for (const auto& g : groups) {
    std::vector<CloudMetrics> members;
    for (const auto& r : rows) {
      if (r.group == g) members.push_back(r);
    }
    report.by_group.emplace_back(g, aggregate(members, mode));
  }
  report.per_cloud = std::move(rows);
  return report;
}

LossWeights TermSelection::apply(LossWeights base) const noexcept {
  if (!deviation) base.sigma = 0.0;
  if (!plane) base.plane = 0.0;
  if (!normal) base.normal = 0.0;
  return base;
}

std::string TermSelection::label() const {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += '+';
    s += name;
  };
  add(deviation, "deviation");
  add(plane, "plane");
  add(normal, "normal");
  return s.empty() ? "none" : s;
}

std::array<TermSelection, 8> ablation_combinations() noexcept {
  std::array<TermSelection, 8> out;
  for (int bits = 0; bits < 8; ++bits) {
    out[static_cast<std::size_t>(bits)] = {(bits & 4) != 0, (bits & 2) != 0, (bits & 1) != 0};
  }
  return out;
}

std::vector<AblationRow> run_ablation(const std::vector<SuiteCloud>& suite, const LossWeights& base,
                                      const OptimizerConfig& config, Averaging mode) {
  if (suite.empty()) throw Error(ErrorKind::InvalidArgument, "ablation needs at least one cloud");
  std::vector<AblationRow> rows;
  for (const TermSelection& terms : ablation_combinations()) {
    const auto start = std::chrono::steady_clock::now();
    AblationRow row;
    row.terms = terms;
    const LossWeights lambda = terms.apply(base);
    for (const SuiteCloud& c : suite) {
      if (!c.cloud.labels) throw Error(ErrorKind::InvalidArgument, "suite cloud " + c.id + " has no labels");
      const SegmentationResult r = segment(c.cloud, lambda, config);
      row.per_cloud.push_back({c.id, c.group, evaluate(r.inlier_mask, *c.cloud.labels)});
    }
    row.mean = aggregate(row.per_cloud, mode);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "deviation,plane,normal,cloud,group,tp,fp,fn,tn,precision,recall,iou\n";
  for (const auto& row : rows) {
    for (const auto& c : row.per_cloud) {
      os << row.terms.deviation << ',' << row.terms.plane << ',' << row.terms.normal << ',' << c.id << ','
         << c.group << ',' << c.metrics.tp << ',' << c.metrics.fp << ',' << c.metrics.fn << ','
         << c.metrics.tn << ',' << fixed(c.metrics.precision) << ',' << fixed(c.metrics.recall) << ','
         << fixed(c.metrics.iou) << '\n';
    }
  }
  return os.str();
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "Deviation  Plane  Normal  Precision  Recall   IoU\n";
  auto mark = [](bool on) { return on ? "   x   " : "   -   "; };
  for (const auto& row : rows) {
    os << "  " << mark(row.terms.deviation) << mark(row.terms.plane) << mark(row.terms.normal) << ' '
       << fixed(100.0 * row.mean.precision, 2) << "%    " << fixed(100.0 * row.mean.recall, 2) << "%  "
       << fixed(100.0 * row.mean.iou, 2) << "%\n";
  }
  return os.str();
}

}  // namespace logseg
