#include "travplant/pixelnet.hpp"

#include "travplant/detail/adam.hpp"
#include "travplant/io.hpp"

#include <array>
#include <cmath>
#include <random>

namespace travplant {

FeatureMatrix SoftmaxClassifier::logits(const FeatureMatrix& X) const {
  FeatureMatrix z = X * weights.transpose();
  z.rowwise() += biases.transpose();
  return z;
}

FeatureMatrix SoftmaxClassifier::probabilities(const FeatureMatrix& X) const { return softmaxRows(logits(X)); }

std::string SoftmaxClassifier::fingerprint() const {
  std::vector<std::byte> bytes;
  auto append = [&bytes](const double* data, Eigen::Index n) {
    const auto* p = reinterpret_cast<const std::byte*>(data);
    bytes.insert(bytes.end(), p, p + n * static_cast<Eigen::Index>(sizeof(double)));
  };
  append(weights.data(), weights.size());
  append(biases.data(), biases.size());
  return sha256Hex(bytes);
}

FeatureMatrix softmaxRows(const FeatureMatrix& logits) {
  FeatureMatrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const Eigen::RowVectorXd e = (row.array() - row.maxCoeff()).exp();
    p.row(i) = e / e.sum();
  }
  return p;
}

LossGrad softmaxLoss(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const FeatureMatrix& X,
                     std::span<const std::uint8_t> labels, double l2) {
  const Eigen::Index k = W.rows();
  FeatureMatrix z = X * W.transpose();
  z.rowwise() += b.transpose();

  FeatureMatrix residual = FeatureMatrix::Zero(X.rows(), k);
  double loss = 0;
  Eigen::Index counted = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const std::uint8_t y = labels[static_cast<std::size_t>(i)];
    if (y == kVoidLabel) continue;
    const double zmax = z.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (z.row(i).array() - zmax).exp();
    const double total = e.sum();
    loss += std::log(total) + zmax - z(i, y);
    residual.row(i) = e / total;
    residual(i, y) -= 1.0;
    ++counted;
  }
  LossGrad out;
  const double scale = counted > 0 ? 1.0 / static_cast<double>(counted) : 0.0;
  out.loss = loss * scale + 0.5 * l2 * W.squaredNorm();
  out.grad_w = scale * (residual.transpose() * X) + l2 * W;
  out.grad_b = scale * residual.colwise().sum().transpose();
  return out;
}

void PseudoLabelNoise::validate() const {
  if (flip_rate < 0 || flip_rate >= 1 || void_rate < 0 || void_rate >= 1 || flip_rate + void_rate >= 1)
    throw InvalidInput("pseudo-label noise rates must satisfy 0 <= rates and flip + void < 1");
}

LabelImage corruptLabels(const LabelImage& gt_class, const PseudoLabelNoise& noise, std::uint64_t seed) {
  noise.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> other(1, kNumClasses - 1);
  LabelImage out = gt_class;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    std::uint8_t& label = out.data()[i];
    if (label == kVoidLabel) continue;
    if (unit(rng) < noise.void_rate) {
      label = kVoidLabel;
    } else if (unit(rng) < noise.flip_rate) {
      label = static_cast<std::uint8_t>((label + other(rng)) % kNumClasses);
    }
  }
  return out;
}

FeatureMatrix frameFeatures(const Frame& frame) { return frame.features.cast<double>(); }

FeatureMatrix neighborhoodMean(const FeatureMatrix& features, int height, int width) {
  FeatureMatrix out = FeatureMatrix::Zero(features.rows(), features.cols());
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u) {
      auto acc = out.row(static_cast<Eigen::Index>(v) * width + u);
      for (int dv = -1; dv <= 1; ++dv)
        for (int du = -1; du <= 1; ++du) {
          const int vv = std::clamp(v + dv, 0, height - 1);
          const int uu = std::clamp(u + du, 0, width - 1);
          acc += features.row(static_cast<Eigen::Index>(vv) * width + uu);
        }
      acc /= 9.0;
    }
  return out;
}

FeatureMatrix temInput(const Frame& frame, const SoftmaxClassifier& ssm) {
  const FeatureMatrix raw = frameFeatures(frame);
  const Eigen::Index f = raw.cols();
  FeatureMatrix x(raw.rows(), 2 * f + ssm.numClasses());
  x.leftCols(f) = raw;
  x.middleCols(f, ssm.numClasses()) = ssm.logits(raw);
  x.rightCols(f) = neighborhoodMean(raw, frame.height(), frame.width());
  return x;
}

SoftmaxClassifier fitSoftmax(const FeatureMatrix& X, std::span<const std::uint8_t> labels, int num_classes,
                             const TrainHyper& h, std::uint64_t seed) {
  h.validate();
  if (static_cast<std::size_t>(X.rows()) != labels.size()) throw InvalidInput("fitSoftmax: feature/label size mismatch");

  std::vector<Eigen::Index> valid;
  std::vector<std::size_t> per_class(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kVoidLabel) continue;
    if (labels[i] >= num_classes) throw InvalidInput("fitSoftmax: label out of range");
    ++per_class[labels[i]];
    valid.push_back(static_cast<Eigen::Index>(i));
  }
  for (int c = 0; c < num_classes; ++c)
    if (per_class[static_cast<std::size_t>(c)] == 0)
      throw DegenerateData("fitSoftmax: class " + std::to_string(c) + " has no labeled pixel");

  const Eigen::Index d = X.cols();
  SoftmaxClassifier model{Eigen::MatrixXd::Zero(num_classes, d), Eigen::VectorXd::Zero(num_classes)};
  detail::AdamState adam_w(num_classes, d);
  detail::AdamState adam_b(num_classes, 1);
  std::mt19937_64 rng(seed);

  FeatureMatrix batch;
  std::vector<std::uint8_t> batch_y;
  int t = 0;
  for (int epoch = 0; epoch < h.epochs; ++epoch) {
    const auto order = detail::epochOrder(static_cast<Eigen::Index>(valid.size()), h.samples_per_epoch, rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(h.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(h.batch_size));
      const auto m = static_cast<Eigen::Index>(stop - start);
      batch.resize(m, d);
      batch_y.resize(static_cast<std::size_t>(m));
      for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index src = valid[static_cast<std::size_t>(order[start + static_cast<std::size_t>(r)])];
        batch.row(r) = X.row(src);
        batch_y[static_cast<std::size_t>(r)] = labels[static_cast<std::size_t>(src)];
      }
      const LossGrad g = softmaxLoss(model.weights, model.biases, batch, batch_y, h.l2);
      ++t;
      adam_w.step(model.weights, g.grad_w, h.learning_rate, t);
      adam_b.step(model.biases, g.grad_b, h.learning_rate, t);
    }
  }
  return model;
}

namespace {

std::vector<std::uint8_t> flatten(std::span<const LabelImage> images) {
  std::vector<std::uint8_t> out;
  for (const auto& img : images) out.insert(out.end(), img.data(), img.data() + img.size());
  return out;
}

FeatureMatrix stackFeatures(std::span<const Frame> frames) {
  Eigen::Index rows = 0;
  for (const auto& f : frames) rows += f.features.rows();
  const Eigen::Index cols = frames.empty() ? 0 : frames.front().features.cols();
  FeatureMatrix X(rows, cols);
  Eigen::Index at = 0;
  for (const auto& f : frames) {
    X.middleRows(at, f.features.rows()) = f.features.cast<double>();
    at += f.features.rows();
  }
  return X;
}

void checkAligned(std::span<const Frame> frames, std::size_t n, const char* what) {
  if (frames.empty()) throw InvalidInput(std::string(what) + ": no frames");
  if (frames.size() != n) throw InvalidInput(std::string(what) + ": frame/label count mismatch");
}

}  // namespace

SoftmaxClassifier trainSsm(std::span<const Frame> frames, std::span<const LabelImage> pseudo_labels,
                           const TrainHyper& h, std::uint64_t seed) {
  checkAligned(frames, pseudo_labels.size(), "trainSsm");
  return fitSoftmax(stackFeatures(frames), flatten(pseudo_labels), kNumClasses, h, seed);
}

SsmPrediction predictSsm(const Frame& frame, const SoftmaxClassifier& ssm) {
  SsmPrediction out;
  out.probabilities = ssm.probabilities(frameFeatures(frame));
  out.argmax = LabelImage(frame.height(), frame.width());
  for (Eigen::Index i = 0; i < out.probabilities.rows(); ++i) {
    Eigen::Index best = 0;
    out.probabilities.row(i).maxCoeff(&best);  // first maximum wins
    out.argmax.data()[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

PuClassifier trainTem(std::span<const Frame> frames, std::span<const MaskImage> masks, const SoftmaxClassifier& ssm,
                      const TrainHyper& h, std::uint64_t seed, const TemOptions& opts) {
  checkAligned(frames, masks.size(), "trainTem");
  if (opts.c_holdout_fraction < 0 || opts.c_holdout_fraction >= 1)
    throw InvalidInput("trainTem: c_holdout_fraction must lie in [0,1)");
  const std::string before = ssm.fingerprint();

  std::vector<FeatureMatrix> inputs;
  Eigen::Index rows = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (masks[i].rows() != frames[i].height() || masks[i].cols() != frames[i].width())
      throw InvalidInput("trainTem: mask shape mismatch");
    inputs.push_back(temInput(frames[i], ssm));
    rows += (frames[i].depth > 0).count();
  }

  std::mt19937_64 split_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index d = inputs.front().cols();
  FeatureMatrix X(rows, d);
  std::vector<std::uint8_t> s;
  std::vector<Eigen::Index> holdout_positive;
  s.reserve(static_cast<std::size_t>(rows));
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    for (Eigen::Index p = 0; p < f.depth.size(); ++p) {
      if (!(f.depth.data()[p] > 0)) continue;
      X.row(at++) = inputs[i].row(p);
      s.push_back(masks[i].data()[p] ? 1 : 0);
    }
  }

  std::vector<Eigen::Index> fit_rows;
  if (opts.c_holdout_fraction > 0) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (unit(split_rng) < opts.c_holdout_fraction) {
        if (s[static_cast<std::size_t>(r)]) holdout_positive.push_back(r);
      } else {
        fit_rows.push_back(r);
      }
    }
  }

  std::size_t positives = 0;
  for (auto v : s) positives += v;
  if (positives == 0) throw DegenerateData("trainTem: traversability masks contain no positive pixel");

  PuClassifier out;
  std::vector<Eigen::Index> labeled_rows;
  if (opts.c_holdout_fraction > 0) {
    if (holdout_positive.empty()) throw DegenerateData("trainTem: no labeled pixel in the held-out split");
    FeatureMatrix Xf(static_cast<Eigen::Index>(fit_rows.size()), d);
    std::vector<std::uint8_t> sf(fit_rows.size());
    for (std::size_t r = 0; r < fit_rows.size(); ++r) {
      Xf.row(static_cast<Eigen::Index>(r)) = X.row(fit_rows[r]);
      sf[r] = s[static_cast<std::size_t>(fit_rows[r])];
    }
    out.label_model = fitLabelModel(Xf, sf, h, seed);
    labeled_rows = holdout_positive;
  } else {
    out.label_model = fitLabelModel(X, s, h, seed);
    for (Eigen::Index r = 0; r < rows; ++r)
      if (s[static_cast<std::size_t>(r)]) labeled_rows.push_back(r);
  }

  FeatureMatrix labeled(static_cast<Eigen::Index>(labeled_rows.size()), d);
  for (std::size_t r = 0; r < labeled_rows.size(); ++r) labeled.row(static_cast<Eigen::Index>(r)) = X.row(labeled_rows[r]);
  out.c = estimateLabelFrequency(out.label_model, labeled);

  if (ssm.fingerprint() != before) throw Error("trainTem: SSM parameters changed during TEM training");
  return out;
}

namespace {

ScalarImage maskedByDepth(const Frame& frame, const Eigen::VectorXd& values) {
  ScalarImage out = ScalarImage::Zero(frame.height(), frame.width());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (frame.depth.data()[i] > 0) out.data()[i] = values(i);
  return out;
}

}  // namespace

ScalarImage predictTrav(const Frame& frame, const SoftmaxClassifier& ssm, const PuClassifier& tem) {
  return maskedByDepth(frame, tem.predict(temInput(frame, ssm)));
}

ScalarImage predictLabelProbability(const Frame& frame, const SoftmaxClassifier& ssm, const PuClassifier& tem) {
  return maskedByDepth(frame, tem.label_model.predict(temInput(frame, ssm)));
}

LabelImage travSegLabels(const LabelImage& pseudo_labels, const MaskImage& mask) {
  if (pseudo_labels.rows() != mask.rows() || pseudo_labels.cols() != mask.cols())
    throw InvalidInput("travSegLabels: shape mismatch");
  LabelImage out(pseudo_labels.rows(), pseudo_labels.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const std::uint8_t y = pseudo_labels.data()[i];
    std::uint8_t z = kVoidLabel;
    switch (static_cast<SemanticClass>(y)) {
      case SemanticClass::Plant:
        z = static_cast<std::uint8_t>(mask.data()[i] ? TravSegClass::TraversablePlant : TravSegClass::OtherPlant);
        break;
      case SemanticClass::Artificial: z = static_cast<std::uint8_t>(TravSegClass::Artificial); break;
      case SemanticClass::Ground: z = static_cast<std::uint8_t>(TravSegClass::Ground); break;
      default: break;
    }
    out.data()[i] = z;
  }
  return out;
}

SoftmaxClassifier trainSegWithTravClass(std::span<const Frame> frames, std::span<const LabelImage> pseudo_labels,
                                        std::span<const MaskImage> masks, const TrainHyper& h, std::uint64_t seed) {
  checkAligned(frames, pseudo_labels.size(), "trainSegWithTravClass");
  checkAligned(frames, masks.size(), "trainSegWithTravClass");
  std::vector<LabelImage> labels;
  labels.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) labels.push_back(travSegLabels(pseudo_labels[i], masks[i]));
  return fitSoftmax(stackFeatures(frames), flatten(labels), kNumTravSegClasses, h, seed);
}

ScalarImage predictSegTrav(const Frame& frame, const SoftmaxClassifier& seg4) {
  const FeatureMatrix p = seg4.probabilities(frameFeatures(frame));
  return maskedByDepth(frame, p.col(static_cast<int>(TravSegClass::TraversablePlant)));
}

}  // namespace travplant
