#ifndef TRAVPLANT_DETAIL_ADAM_HPP
#define TRAVPLANT_DETAIL_ADAM_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace travplant::detail {

/// Adam moments for one parameter block.
class AdamState {
 public:
  AdamState(Eigen::Index rows, Eigen::Index cols)
      : m_(Eigen::MatrixXd::Zero(rows, cols)), v_(Eigen::MatrixXd::Zero(rows, cols)) {}

  template <typename Param, typename Grad>
  void step(Param& param, const Grad& grad, double lr, int t) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    m_ = kBeta1 * m_ + (1 - kBeta1) * grad;
    v_ = kBeta2 * v_ + (1 - kBeta2) * grad.cwiseAbs2();
    const double c1 = 1 - std::pow(kBeta1, t);
    const double c2 = 1 - std::pow(kBeta2, t);
    param -= (lr * (m_ / c1).array() / ((v_ / c2).array().sqrt() + kEps)).matrix();
  }

 private:
  Eigen::MatrixXd m_;
  Eigen::MatrixXd v_;
};

/// Sample indices for one epoch: a seeded shuffle, truncated to `limit` when positive.
inline std::vector<Eigen::Index> epochOrder(Eigen::Index n, int limit, std::mt19937_64& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  if (limit > 0 && n > limit) idx.resize(static_cast<std::size_t>(limit));
  return idx;
}

}  // namespace travplant::detail

#endif  // TRAVPLANT_DETAIL_ADAM_HPP
