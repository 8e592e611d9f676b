#include "gradcheck.hpp"
#include "scar.hpp"
#include "travplant/pu.hpp"

#include <doctest.h>

#include <random>

using namespace travplant;

namespace {

double logit(double p) { return std::log(p / (1 - p)); }

TrainHyper fullBatch(int epochs) {
  TrainHyper h;
  h.epochs = epochs;
  h.batch_size = 1 << 20;
  h.samples_per_epoch = 0;
  h.learning_rate = 0.05;
  return h;
}

}  // namespace

TEST_SUITE("pu") {
  TEST_CASE("sigmoid and label model output lie in (0,1)") {
    for (double z : {-30.0, -1.0, 0.0, 2.5, 30.0}) {
      CHECK(sigmoid(z) > 0);
      CHECK(sigmoid(z) < 1);
    }
    CHECK(sigmoid(0) == 0.5);
    CHECK(sigmoid(-800) >= 0);
    CHECK(sigmoid(800) <= 1);
  }

  TEST_CASE("logistic gradient matches finite differences") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 100; ++i) CHECK(gradcheck::logisticGradError(rng) < 1e-4);
  }

  TEST_CASE("separable labels are fit") {
    scar::Problem p;
    p.c = 1.0;
    const auto s = scar::draw(p, 4000, 3);
    const LabelModel m = fitLabelModel(s.X, s.s, TrainHyper{}, 1);
    int correct = 0;
    for (Eigen::Index i = 0; i < s.X.rows(); ++i) correct += (m(s.X.row(i)) > 0.5) == (s.s[i] == 1);
    CHECK(correct >= 0.99 * s.X.rows());
  }

  TEST_CASE("fitting is deterministic for a seed") {
    const auto s = scar::draw(scar::Problem{}, 3000, 4);
    const LabelModel a = fitLabelModel(s.X, s.s, TrainHyper{}, 9);
    const LabelModel b = fitLabelModel(s.X, s.s, TrainHyper{}, 9);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
  }

  TEST_CASE("duplicating every sample leaves the converged model unchanged") {
    scar::Problem p;
    p.offset = 1.0;
    const auto s = scar::draw(p, 500, 5);
    FeatureMatrix X2(2 * s.X.rows(), s.X.cols());
    X2 << s.X, s.X;
    std::vector<std::uint8_t> s2 = s.s;
    s2.insert(s2.end(), s.s.begin(), s.s.end());
    const TrainHyper h = fullBatch(3000);
    const LabelModel a = fitLabelModel(s.X, s.s, h, 1);
    const LabelModel b = fitLabelModel(X2, s2, h, 1);
    CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(a.bias - b.bias) < 1e-6);
  }

  TEST_CASE("single label value is degenerate") {
    FeatureMatrix X = FeatureMatrix::Random(10, 2);
    std::vector<std::uint8_t> ones(10, 1), zeros(10, 0);
    CHECK_THROWS_AS(fitLabelModel(X, ones, TrainHyper{}, 1), DegenerateData);
    CHECK_THROWS_AS(fitLabelModel(X, zeros, TrainHyper{}, 1), DegenerateData);
    std::vector<std::uint8_t> short_labels(3, 1);
    CHECK_THROWS_AS(fitLabelModel(X, short_labels, TrainHyper{}, 1), InvalidInput);
    TrainHyper bad;
    bad.learning_rate = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
  }

  TEST_CASE("label frequency examples") {
    LabelModel flat;
    flat.weights = Eigen::VectorXd::Zero(2);
    CHECK(estimateLabelFrequency(flat, FeatureMatrix::Random(7, 2)) == doctest::Approx(0.5).epsilon(1e-15));
    LabelModel one;
    one.weights = Eigen::VectorXd::Zero(2);
    one.bias = logit(0.73);
    CHECK(estimateLabelFrequency(one, FeatureMatrix::Random(1, 2)) == doctest::Approx(0.73).epsilon(1e-12));
    CHECK_THROWS_AS(estimateLabelFrequency(one, FeatureMatrix(0, 2)), InvalidInput);
  }

  TEST_CASE("posterior correction") {
    CHECK(correctPosterior(0.3, 0.5) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(correctPosterior(0.9, 0.5) == 1.0);
    for (double g = 0; g <= 1.0; g += 0.05) CHECK(correctPosterior(g, 1.0) == g);
    CHECK_THROWS_AS(correctPosterior(0.3, 0.0), InvalidInput);
    CHECK_THROWS_AS(correctPosterior(0.3, -0.2), InvalidInput);
    CHECK_THROWS_AS(correctPosterior(0.3, 1.2), InvalidInput);
  }

  TEST_CASE("correction is monotone") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 10000; ++i) {
      const double g1 = u(rng), g2 = u(rng);
      const double c1 = std::max(u(rng), 1e-3), c2 = std::max(u(rng), 1e-3);
      CHECK((correctPosterior(std::min(g1, g2), c1) <= correctPosterior(std::max(g1, g2), c1)));
      CHECK((correctPosterior(g1, std::max(c1, c2)) <= correctPosterior(g1, std::min(c1, c2))));
    }
  }

  TEST_CASE("label frequency recovers c under SCAR") {
    const scar::Problem p;
    const auto s = scar::draw(p, 20000, 100);
    PuClassifier pu;
    pu.label_model = fitLabelModel(s.X, s.s, TrainHyper{}, 1);
    const FeatureMatrix L = scar::labeledRows(s);
    pu.c = estimateLabelFrequency(pu.label_model, L);
    CHECK(std::abs(pu.c - p.c) <= 0.05);
    // Re-averaging g over the labeled rows reproduces c exactly.
    CHECK(pu.label_model.predict(L).mean() == doctest::Approx(pu.c).epsilon(1e-12));
    const auto held = scar::draw(p, 20000, 200);
    const Eigen::VectorXd pred = pu.predict(held.X);
    double mae = 0;
    for (Eigen::Index i = 0; i < held.X.rows(); ++i) mae += std::abs(pred(i) - p.posterior(held.X.row(i)));
    CHECK(mae / held.X.rows() <= 0.08);
  }

  TEST_CASE("fully labeled positives drive c toward one") {
    scar::Problem p;
    p.c = 1.0;
    const auto s = scar::draw(p, 20000, 7);
    const LabelModel m = fitLabelModel(s.X, s.s, TrainHyper{}, 1);
    const double c = estimateLabelFrequency(m, scar::labeledRows(s));
    CHECK(c >= 0.9);
    PuClassifier pu{m, c};
    for (Eigen::Index i = 0; i < 200; ++i)
      CHECK(std::abs(pu(s.X.row(i)) - std::min(m(s.X.row(i)) / c, 1.0)) < 1e-15);
  }
}
