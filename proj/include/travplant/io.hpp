#ifndef TRAVPLANT_IO_HPP
#define TRAVPLANT_IO_HPP

#include "travplant/geometry.hpp"
#include "travplant/pixelnet.hpp"
#include "travplant/pu.hpp"
#include "travplant/types.hpp"
#include "travplant/voxelfusion.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace travplant {

// ---------------------------------------------------------------------------
// Raster container
//
//   offset  size  field
//   0       4     magic "TRAV"
//   4       2     version (u16, currently 1)
//   6       1     dtype (0 = IEEE-754 float32, 1 = u8)
//   7       2     channels (u16)
//   9       4     height (u32)
//   13      4     width (u32)
//   17      ...   payload, row-major, channel-interleaved
//
// All integers and floats are little-endian.
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kRasterVersion = 1;
inline constexpr std::size_t kRasterHeaderSize = 17;

enum class RasterType : std::uint8_t { Float32 = 0, UInt8 = 1 };

struct Raster {
  RasterType dtype = RasterType::Float32;
  std::uint16_t channels = 1;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<float> f32;       // used when dtype == Float32
  std::vector<std::uint8_t> u8;  // used when dtype == UInt8

  std::size_t elementCount() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
};

std::vector<std::byte> encodeRaster(const Raster& r);

/// Throws FormatError on bad magic, version, dtype or payload length.
Raster decodeRaster(std::span<const std::byte> bytes);

Raster toRaster(const Image<float>& img);
Raster toRaster(const Image<std::uint8_t>& img);
Raster toRaster(const PixelMatrix<float>& pixels, int height, int width);

Image<float> rasterToFloatImage(const Raster& r);
Image<std::uint8_t> rasterToByteImage(const Raster& r);
PixelMatrix<float> rasterToPixels(const Raster& r);

void writeRaster(const std::filesystem::path& path, const Raster& r);
Raster readRaster(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Files and hashing
// ---------------------------------------------------------------------------

std::vector<std::byte> readFileBytes(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename.
void writeFileAtomic(const std::filesystem::path& path, std::span<const std::byte> bytes);
void writeTextAtomic(const std::filesystem::path& path, std::string_view text);
std::string readText(const std::filesystem::path& path);

std::string sha256Hex(std::span<const std::byte> bytes);
std::string sha256File(const std::filesystem::path& path);

/// Deterministic sub-seed for a named component.
std::uint64_t deriveSeed(std::uint64_t root, std::string_view label);

/// Shortest decimal text that parses back to the identical double.
std::string formatDouble(double v);
double parseDouble(std::string_view text);
std::vector<std::string> splitCsvLine(std::string_view line);

// ---------------------------------------------------------------------------
// CSV formats
// ---------------------------------------------------------------------------

/// frame_id,tx,ty,tz,qx,qy,qz,qw
struct PoseRecord {
  int frame_id;
  Pose pose;
};
std::string posesToCsv(std::span<const PoseRecord> poses);
std::vector<PoseRecord> posesFromCsv(std::string_view text);

/// Header line "softmax,D,K" then K rows "bias,w_1..w_D".
std::string softmaxToCsv(const SoftmaxClassifier& m);
SoftmaxClassifier softmaxFromCsv(std::string_view text);

/// Header line "pu,D,1,c" then one row "bias,w_1..w_D".
std::string puToCsv(const PuClassifier& m);
PuClassifier puFromCsv(std::string_view text);

/// "class_likelihood,3" + 3 rows, then "trav_likelihood,B" + 2 rows.
std::string likelihoodsToCsv(const ClassLikelihood& cls, const TravLikelihood& trav);
std::pair<ClassLikelihood, TravLikelihood> likelihoodsFromCsv(std::string_view text);

/// ix,iy,iz,p_plant,p_artificial,p_ground,q,cx,cy,cz,count,miss
std::string mapSnapshotToCsv(const SemanticVoxelMap& map);

/// x,y,z
std::string cloudToCsv(std::span<const Vec3> cloud);

/// ix,iy,iz
std::string keysToCsv(std::span<const VoxelKey> keys);

}  // namespace travplant

#endif  // TRAVPLANT_IO_HPP
