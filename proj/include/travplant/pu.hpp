#ifndef TRAVPLANT_PU_HPP
#define TRAVPLANT_PU_HPP

#include "travplant/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>

namespace travplant {

using FeatureMatrix = PixelMatrix<double>;

struct TrainHyper {
  double learning_rate = 1e-2;
  int epochs = 200;
  int batch_size = 4096;
  double l2 = 1e-4;
  // Uniform seeded subsample drawn each epoch; 0 uses every sample.
  int samples_per_epoch = 16384;

  void validate() const;
};

/// g(x) = sigmoid(w . x + b), the probability that x carries a positive label.
struct LabelModel {
  Eigen::VectorXd weights;
  double bias = 0.0;

  int dim() const { return static_cast<int>(weights.size()); }

  double logit(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return x.dot(weights) + bias; }
  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::VectorXd predict(const FeatureMatrix& X) const;
};

double sigmoid(double z);

struct LossGrad {
  double loss = 0;
  Eigen::MatrixXd grad_w;  // same shape as the weights
  Eigen::VectorXd grad_b;
};

/// Mean binary cross-entropy of sigmoid(X w + b) against s, plus l2/2 |w|^2.
LossGrad logisticLoss(const Eigen::VectorXd& w, double b, const FeatureMatrix& X, std::span<const std::uint8_t> s,
                      double l2);

/// Mini-batch Adam on the logistic loss. Deterministic for a fixed seed.
/// Throws DegenerateData unless both label values occur.
LabelModel fitLabelModel(const FeatureMatrix& X, std::span<const std::uint8_t> s, const TrainHyper& h,
                         std::uint64_t seed);

/// Label frequency c = mean of g over labeled examples.
double estimateLabelFrequency(const LabelModel& model, const FeatureMatrix& X_labeled);

/// p(y=1|x) = min(g / c, 1).
double correctPosterior(double g_value, double c);

struct PuClassifier {
  LabelModel label_model;
  double c = 1.0;

  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return correctPosterior(label_model(x), c);
  }
  Eigen::VectorXd predict(const FeatureMatrix& X) const;
};

}  // namespace travplant

#endif  // TRAVPLANT_PU_HPP
