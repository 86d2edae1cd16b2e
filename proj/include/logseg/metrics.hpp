#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "logseg/loss.hpp"
#include "logseg/segmenter.hpp"

namespace logseg {

/// Confusion counts and rates for the inlier (positive) class.
struct Metrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double iou = 0.0;
  /// Set when a rate's denominator was zero (the rate then reads 0).
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool iou_undefined = false;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

/// Throws LengthMismatch on unequal lengths.
Metrics evaluate(const std::vector<bool>& predicted, const std::vector<bool>& truth);

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

enum class Averaging {
  Macro,  // mean of per-cloud rates
  Micro,  // rates of the pooled confusion matrix
};

struct CloudMetrics {
  std::string id;
  std::string group;
  Metrics metrics;
};

struct MeanMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double iou = 0.0;
  std::size_t clouds = 0;
};

MeanMetrics aggregate(const std::vector<CloudMetrics>& rows, Averaging mode = Averaging::Macro);

struct EvalReport {
  std::vector<CloudMetrics> per_cloud;
  MeanMetrics overall;
  /// Means per group label, in first-seen order.
  std::vector<std::pair<std::string, MeanMetrics>> by_group;
};

EvalReport make_report(std::vector<CloudMetrics> rows, Averaging mode = Averaging::Macro);

/// One labeled cloud of an evaluation suite, already normalized.
struct SuiteCloud {
  std::string id;
  std::string group;
  PointCloud cloud;
};

/// The three optional terms, in table column order.
struct TermSelection {
  bool deviation = true;
  bool plane = true;
  bool normal = true;

  LossWeights apply(LossWeights base) const noexcept;
  std::string label() const;  // e.g. "dev+plane", "none"
};

/// The eight on/off combinations, ordered with deviation as the most
/// significant bit: (000, 001, ..., 111) over (deviation, plane, normal).
std::array<TermSelection, 8> ablation_combinations() noexcept;

struct AblationRow {
  TermSelection terms;
  MeanMetrics mean;
  std::vector<CloudMetrics> per_cloud;
  double seconds = 0.0;
};

/// Segments every cloud once per combination with the same config (and seed),
/// zeroing the disabled coefficients without renormalizing the rest.
std::vector<AblationRow> run_ablation(const std::vector<SuiteCloud>& suite, const LossWeights& base,
                                      const OptimizerConfig& config,
                                      Averaging mode = Averaging::Macro);

/// Per-cloud CSV rows (one per cloud per combination) with a header.
std::string ablation_csv(const std::vector<AblationRow>& rows);
/// Table layout: one row per combination with check marks and mean rates.
std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace logseg
