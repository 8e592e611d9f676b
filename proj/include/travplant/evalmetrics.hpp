#ifndef TRAVPLANT_EVALMETRICS_HPP
#define TRAVPLANT_EVALMETRICS_HPP

#include "travplant/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace travplant {

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }

  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// A metric with a zero denominator is empty rather than 0.
struct Metrics {
  std::optional<double> iou;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
};

/// value > threshold.
MaskImage binarize(const ScalarImage& trav, double threshold);

/// Keeps positives only where the predicted class is plant.
MaskImage refine(const MaskImage& mask, const LabelImage& class_argmax);

Confusion confusion(const MaskImage& pred, const MaskImage& gt);
Metrics metrics(const Confusion& c);

struct CurveRow {
  double threshold;
  Confusion confusion;
  Metrics metrics;
};

struct CurveTable {
  std::vector<CurveRow> raw;
  std::vector<CurveRow> refined;

  /// Index of the row with the highest IoU; ties keep the lowest threshold.
  static std::size_t bestIoU(const std::vector<CurveRow>& rows);
};

/// Micro-averaged confusion per threshold over all images. `class_images`
/// may be empty, in which case the refined table is left empty.
CurveTable sweepCurves(std::span<const ScalarImage> trav, std::span<const LabelImage> class_images,
                       std::span<const MaskImage> gt, std::span<const double> thresholds);

/// `n + 1` evenly spaced thresholds from 0 to 1.
std::vector<double> uniformThresholds(int n);

/// Metric in percent with two decimals, or "nan" when undefined.
std::string formatPercent(const std::optional<double>& value);

}  // namespace travplant

#endif  // TRAVPLANT_EVALMETRICS_HPP
