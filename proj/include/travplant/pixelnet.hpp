#ifndef TRAVPLANT_PIXELNET_HPP
#define TRAVPLANT_PIXELNET_HPP

#include "travplant/pu.hpp"
#include "travplant/synthworld.hpp"
#include "travplant/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace travplant {

/// Per-pixel linear softmax over K classes: p = softmax(W x + b).
struct SoftmaxClassifier {
  Eigen::MatrixXd weights;  // K x D
  Eigen::VectorXd biases;   // K

  int numClasses() const { return static_cast<int>(weights.rows()); }
  int dim() const { return static_cast<int>(weights.cols()); }

  FeatureMatrix logits(const FeatureMatrix& X) const;
  FeatureMatrix probabilities(const FeatureMatrix& X) const;

  /// SHA-256 over the parameter bytes; changes iff any parameter bit changes.
  std::string fingerprint() const;
};

/// Row-wise softmax of a logit matrix.
FeatureMatrix softmaxRows(const FeatureMatrix& logits);

/// Mean cross-entropy over pixels whose label is not void, plus l2/2 |W|^2.
/// Void pixels contribute neither loss nor gradient.
LossGrad softmaxLoss(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const FeatureMatrix& X,
                     std::span<const std::uint8_t> labels, double l2);

struct PseudoLabelNoise {
  double flip_rate = 0.1;
  double void_rate = 0.1;

  void validate() const;
};

/// Each non-void pixel independently becomes void with probability void_rate,
/// otherwise flips to a uniformly chosen other class with probability flip_rate.
LabelImage corruptLabels(const LabelImage& gt_class, const PseudoLabelNoise& noise, std::uint64_t seed);

/// Frame features widened to double.
FeatureMatrix frameFeatures(const Frame& frame);

/// Mean over the 3x3 neighborhood with edge replication; `features` is (H*W) x F.
FeatureMatrix neighborhoodMean(const FeatureMatrix& features, int height, int width);

/// TEM input rows [raw (F) | SSM logits (3) | 3x3 mean of raw (F)].
FeatureMatrix temInput(const Frame& frame, const SoftmaxClassifier& ssm);

/// Generic softmax fit; labels equal to kVoidLabel are ignored.
SoftmaxClassifier fitSoftmax(const FeatureMatrix& X, std::span<const std::uint8_t> labels, int num_classes,
                             const TrainHyper& h, std::uint64_t seed);

/// Three-class semantic segmentation stand-in trained on pseudo-labels.
SoftmaxClassifier trainSsm(std::span<const Frame> frames, std::span<const LabelImage> pseudo_labels,
                           const TrainHyper& h, std::uint64_t seed);

struct SsmPrediction {
  FeatureMatrix probabilities;  // (H*W) x K
  LabelImage argmax;            // ties resolve to the lowest class index
};

SsmPrediction predictSsm(const Frame& frame, const SoftmaxClassifier& ssm);

struct TemOptions {
  // Fraction of labeled pixels withheld from fitting and used to estimate c;
  // 0 estimates c over the training positives.
  double c_holdout_fraction = 0.0;
};

/// Fits the PU label model on TEM inputs with s = mask. The SSM is read-only.
PuClassifier trainTem(std::span<const Frame> frames, std::span<const MaskImage> masks, const SoftmaxClassifier& ssm,
                      const TrainHyper& h, std::uint64_t seed, const TemOptions& opts = {});

/// Corrected traversability per pixel; pixels without a depth return are 0.
ScalarImage predictTrav(const Frame& frame, const SoftmaxClassifier& ssm, const PuClassifier& tem);

/// Uncorrected label probability g per pixel; pixels without a depth return are 0.
ScalarImage predictLabelProbability(const Frame& frame, const SoftmaxClassifier& ssm, const PuClassifier& tem);

/// Four-class labels: plant pixels become traversable-plant where the mask is 1.
LabelImage travSegLabels(const LabelImage& pseudo_labels, const MaskImage& mask);

/// Baseline segmentation with a traversable-plant class.
SoftmaxClassifier trainSegWithTravClass(std::span<const Frame> frames, std::span<const LabelImage> pseudo_labels,
                                        std::span<const MaskImage> masks, const TrainHyper& h, std::uint64_t seed);

/// Traversable-plant channel of the baseline; pixels without a depth return are 0.
ScalarImage predictSegTrav(const Frame& frame, const SoftmaxClassifier& seg4);

}  // namespace travplant

#endif  // TRAVPLANT_PIXELNET_HPP
