#include "travplant/pu.hpp"

#include "travplant/detail/adam.hpp"

#include <cmath>
#include <random>

namespace travplant {

void TrainHyper::validate() const {
  if (!(learning_rate > 0)) throw InvalidInput("learning rate must be positive");
  if (epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (batch_size < 1) throw InvalidInput("batch size must be >= 1");
  if (l2 < 0) throw InvalidInput("l2 penalty must be >= 0");
  if (samples_per_epoch < 0) throw InvalidInput("samples_per_epoch must be >= 0");
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double LabelModel::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return sigmoid(logit(x)); }

Eigen::VectorXd LabelModel::predict(const FeatureMatrix& X) const {
  Eigen::VectorXd z = X * weights;
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = sigmoid(z(i) + bias);
  return z;
}

Eigen::VectorXd PuClassifier::predict(const FeatureMatrix& X) const {
  Eigen::VectorXd g = label_model.predict(X);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = correctPosterior(g(i), c);
  return g;
}

LossGrad logisticLoss(const Eigen::VectorXd& w, double b, const FeatureMatrix& X, std::span<const std::uint8_t> s,
                      double l2) {
  const Eigen::Index n = X.rows();
  const Eigen::VectorXd z = (X * w).array() + b;
  Eigen::VectorXd residual(n);
  double loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zi = z(i);
    const double si = s[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    // log(1 + e^z) - s z, evaluated without overflow
    loss += std::max(zi, 0.0) - zi * si + std::log1p(std::exp(-std::abs(zi)));
    residual(i) = sigmoid(zi) - si;
  }
  LossGrad out;
  out.loss = loss / n + 0.5 * l2 * w.squaredNorm();
  out.grad_w = X.transpose() * residual / static_cast<double>(n) + l2 * w;
  out.grad_b = Eigen::VectorXd::Constant(1, residual.sum() / n);
  return out;
}

LabelModel fitLabelModel(const FeatureMatrix& X, std::span<const std::uint8_t> s, const TrainHyper& h,
                         std::uint64_t seed) {
  h.validate();
  const Eigen::Index n = X.rows();
  if (n < 1 || static_cast<std::size_t>(n) != s.size()) throw InvalidInput("fitLabelModel: feature/label size mismatch");
  std::size_t positives = 0;
  for (auto v : s) positives += v ? 1 : 0;
  if (positives == 0 || positives == s.size()) throw DegenerateData("fitLabelModel: both label values are required");

  const Eigen::Index d = X.cols();
  LabelModel model{Eigen::VectorXd::Zero(d), 0.0};
  detail::AdamState adam_w(d, 1);
  detail::AdamState adam_b(1, 1);
  std::mt19937_64 rng(seed);

  FeatureMatrix batch;
  std::vector<std::uint8_t> batch_s;
  int t = 0;
  for (int epoch = 0; epoch < h.epochs; ++epoch) {
    const auto order = detail::epochOrder(n, h.samples_per_epoch, rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(h.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(h.batch_size));
      const auto m = static_cast<Eigen::Index>(stop - start);
      batch.resize(m, d);
      batch_s.resize(static_cast<std::size_t>(m));
      for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index src = order[start + static_cast<std::size_t>(r)];
        batch.row(r) = X.row(src);
        batch_s[static_cast<std::size_t>(r)] = s[static_cast<std::size_t>(src)];
      }
      const LossGrad g = logisticLoss(model.weights, model.bias, batch, batch_s, h.l2);
      ++t;
      adam_w.step(model.weights, g.grad_w, h.learning_rate, t);
      Eigen::Matrix<double, 1, 1> b;
      b(0) = model.bias;
      adam_b.step(b, g.grad_b, h.learning_rate, t);
      model.bias = b(0);
    }
  }
  return model;
}

double estimateLabelFrequency(const LabelModel& model, const FeatureMatrix& X_labeled) {
  if (X_labeled.rows() == 0) throw InvalidInput("estimateLabelFrequency: empty labeled set");
  return model.predict(X_labeled).mean();
}

double correctPosterior(double g_value, double c) {
  if (!(c > 0) || c > 1) throw InvalidInput("label frequency c must lie in (0, 1]");
  return std::min(g_value / c, 1.0);
}

}  // namespace travplant
