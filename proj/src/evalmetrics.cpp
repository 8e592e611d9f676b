#include "travplant/evalmetrics.hpp"

#include <cstdio>

namespace travplant {

MaskImage binarize(const ScalarImage& trav, double threshold) {
  if (threshold < 0 || threshold > 1) throw InvalidInput("binarize: threshold must lie in [0,1]");
  return (trav > threshold).cast<std::uint8_t>();
}

MaskImage refine(const MaskImage& mask, const LabelImage& class_argmax) {
  if (mask.rows() != class_argmax.rows() || mask.cols() != class_argmax.cols())
    throw InvalidInput("refine: shape mismatch");
  const auto plant = static_cast<std::uint8_t>(SemanticClass::Plant);
  return ((mask != 0) && (class_argmax == plant)).cast<std::uint8_t>();
}

Confusion confusion(const MaskImage& pred, const MaskImage& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) throw InvalidInput("confusion: shape mismatch");
  const auto p = (pred != 0);
  const auto g = (gt != 0);
  Confusion c;
  c.tp = static_cast<std::uint64_t>((p && g).count());
  c.fp = static_cast<std::uint64_t>((p && !g).count());
  c.fn = static_cast<std::uint64_t>((!p && g).count());
  c.tn = static_cast<std::uint64_t>((!p && !g).count());
  return c;
}

Metrics metrics(const Confusion& c) {
  auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  return {ratio(c.tp, c.tp + c.fp + c.fn), ratio(c.tp + c.tn, c.total()), ratio(c.tp, c.tp + c.fp),
          ratio(c.tp, c.tp + c.fn)};
}

std::size_t CurveTable::bestIoU(const std::vector<CurveRow>& rows) {
  std::size_t best = 0;
  double best_iou = -1;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double iou = rows[i].metrics.iou.value_or(-1);
    if (iou > best_iou) {
      best_iou = iou;
      best = i;
    }
  }
  return best;
}

CurveTable sweepCurves(std::span<const ScalarImage> trav, std::span<const LabelImage> class_images,
                       std::span<const MaskImage> gt, std::span<const double> thresholds) {
  if (thresholds.empty()) throw InvalidInput("sweepCurves: empty threshold list");
  if (trav.size() != gt.size()) throw InvalidInput("sweepCurves: image count mismatch");
  const bool with_refined = !class_images.empty();
  if (with_refined && class_images.size() != trav.size()) throw InvalidInput("sweepCurves: class image count mismatch");
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (!(thresholds[i] > thresholds[i - 1])) throw InvalidInput("sweepCurves: thresholds must increase strictly");

  CurveTable table;
  for (double t : thresholds) {
    Confusion raw;
    Confusion ref;
    for (std::size_t i = 0; i < trav.size(); ++i) {
      const MaskImage b = binarize(trav[i], t);
      raw += confusion(b, gt[i]);
      if (with_refined) ref += confusion(refine(b, class_images[i]), gt[i]);
    }
    table.raw.push_back({t, raw, metrics(raw)});
    if (with_refined) table.refined.push_back({t, ref, metrics(ref)});
  }
  return table;
}

std::vector<double> uniformThresholds(int n) {
  if (n < 1) throw InvalidInput("uniformThresholds: need at least one interval");
  std::vector<double> out;
  for (int i = 0; i <= n; ++i) out.push_back(static_cast<double>(i) / n);
  return out;
}

std::string formatPercent(const std::optional<double>& value) {
  if (!value) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *value);
  return buf;
}

}  // namespace travplant
