#ifndef TRAVPLANT_TYPES_HPP
#define TRAVPLANT_TYPES_HPP

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace travplant {

/// Row-major H x W image. Element (v, u) is row v, column u.
template <typename T>
using Image = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One row per pixel (index v * W + u), one column per feature channel.
template <typename T>
using PixelMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Semantic classes shared by the segmentation stand-in, the voxel map and the renderer.
enum class SemanticClass : std::uint8_t { Plant = 0, Artificial = 1, Ground = 2, Void = 255 };

inline constexpr int kNumClasses = 3;
inline constexpr std::uint8_t kVoidLabel = 255;

/// Labels of the four-class baseline segmentation.
enum class TravSegClass : std::uint8_t { TraversablePlant = 0, OtherPlant = 1, Artificial = 2, Ground = 3 };

inline constexpr int kNumTravSegClasses = 4;

using LabelImage = Image<std::uint8_t>;
using MaskImage = Image<std::uint8_t>;
using DepthImage = Image<float>;
using ScalarImage = Image<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Training data cannot identify the model (e.g. a single label value).
class DegenerateData : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace travplant

#endif  // TRAVPLANT_TYPES_HPP
