#include "travplant/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace travplant {

namespace {

void putU16(std::vector<std::byte>& out, std::uint16_t v) {
  out.push_back(static_cast<std::byte>(v & 0xff));
  out.push_back(static_cast<std::byte>(v >> 8));
}

void putU32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
}

std::uint32_t getU32(std::span<const std::byte> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

std::uint16_t getU16(std::span<const std::byte> b, std::size_t at) {
  return static_cast<std::uint16_t>(std::to_integer<std::uint16_t>(b[at]) |
                                    (std::to_integer<std::uint16_t>(b[at + 1]) << 8));
}

std::vector<std::string> lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(std::move(line));
    start = end + 1;
  }
  return out;
}

int parseInt(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("invalid integer '" + std::string(s) + "'");
  return v;
}

void expectFields(const std::vector<std::string>& f, std::size_t n, const char* what) {
  if (f.size() != n) throw FormatError(std::string(what) + ": expected " + std::to_string(n) + " fields");
}

}  // namespace

std::vector<std::byte> encodeRaster(const Raster& r) {
  const std::size_t n = r.elementCount();
  const bool is_float = r.dtype == RasterType::Float32;
  if ((is_float ? r.f32.size() : r.u8.size()) != n) throw InvalidInput("encodeRaster: payload size mismatch");
  std::vector<std::byte> out;
  out.reserve(kRasterHeaderSize + n * (is_float ? 4 : 1));
  for (char c : {'T', 'R', 'A', 'V'}) out.push_back(static_cast<std::byte>(c));
  putU16(out, kRasterVersion);
  out.push_back(static_cast<std::byte>(r.dtype));
  putU16(out, r.channels);
  putU32(out, r.height);
  putU32(out, r.width);
  if (is_float) {
    for (float v : r.f32) putU32(out, std::bit_cast<std::uint32_t>(v));
  } else {
    for (std::uint8_t v : r.u8) out.push_back(static_cast<std::byte>(v));
  }
  return out;
}

Raster decodeRaster(std::span<const std::byte> bytes) {
  if (bytes.size() < kRasterHeaderSize) throw FormatError("raster: truncated header");
  if (bytes[0] != std::byte{'T'} || bytes[1] != std::byte{'R'} || bytes[2] != std::byte{'A'} ||
      bytes[3] != std::byte{'V'})
    throw FormatError("raster: bad magic");
  if (getU16(bytes, 4) != kRasterVersion) throw FormatError("raster: unsupported version");
  const auto dtype = std::to_integer<std::uint8_t>(bytes[6]);
  if (dtype > 1) throw FormatError("raster: unknown dtype code");
  Raster r;
  r.dtype = static_cast<RasterType>(dtype);
  r.channels = getU16(bytes, 7);
  r.height = getU32(bytes, 9);
  r.width = getU32(bytes, 13);
  const std::size_t elem = r.dtype == RasterType::Float32 ? 4 : 1;
  // 16 + 32 + 32 bits of extent cannot overflow 128 bits but can overflow size_t; check stepwise.
  const std::size_t limit = std::numeric_limits<std::size_t>::max();
  std::size_t n = r.channels;
  if (r.height != 0 && n > limit / r.height) throw FormatError("raster: extent overflow");
  n *= r.height;
  if (r.width != 0 && n > limit / r.width) throw FormatError("raster: extent overflow");
  n *= r.width;
  if (n > (limit - kRasterHeaderSize) / elem) throw FormatError("raster: extent overflow");
  if (bytes.size() != kRasterHeaderSize + n * elem) throw FormatError("raster: payload length mismatch");
  if (r.dtype == RasterType::Float32) {
    r.f32.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.f32[i] = std::bit_cast<float>(getU32(bytes, kRasterHeaderSize + 4 * i));
  } else {
    r.u8.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.u8[i] = std::to_integer<std::uint8_t>(bytes[kRasterHeaderSize + i]);
  }
  return r;
}

Raster toRaster(const Image<float>& img) {
  Raster r;
  r.dtype = RasterType::Float32;
  r.height = static_cast<std::uint32_t>(img.rows());
  r.width = static_cast<std::uint32_t>(img.cols());
  r.f32.assign(img.data(), img.data() + img.size());
  return r;
}

Raster toRaster(const Image<std::uint8_t>& img) {
  Raster r;
  r.dtype = RasterType::UInt8;
  r.height = static_cast<std::uint32_t>(img.rows());
  r.width = static_cast<std::uint32_t>(img.cols());
  r.u8.assign(img.data(), img.data() + img.size());
  return r;
}

Raster toRaster(const PixelMatrix<float>& pixels, int height, int width) {
  if (pixels.rows() != static_cast<Eigen::Index>(height) * width) throw InvalidInput("toRaster: pixel count mismatch");
  Raster r;
  r.dtype = RasterType::Float32;
  r.channels = static_cast<std::uint16_t>(pixels.cols());
  r.height = static_cast<std::uint32_t>(height);
  r.width = static_cast<std::uint32_t>(width);
  r.f32.assign(pixels.data(), pixels.data() + pixels.size());
  return r;
}

Image<float> rasterToFloatImage(const Raster& r) {
  if (r.dtype != RasterType::Float32 || r.channels != 1) throw FormatError("raster: expected 1-channel float32");
  Image<float> img(r.height, r.width);
  std::copy(r.f32.begin(), r.f32.end(), img.data());
  return img;
}

Image<std::uint8_t> rasterToByteImage(const Raster& r) {
  if (r.dtype != RasterType::UInt8 || r.channels != 1) throw FormatError("raster: expected 1-channel u8");
  Image<std::uint8_t> img(r.height, r.width);
  std::copy(r.u8.begin(), r.u8.end(), img.data());
  return img;
}

PixelMatrix<float> rasterToPixels(const Raster& r) {
  if (r.dtype != RasterType::Float32) throw FormatError("raster: expected float32 features");
  PixelMatrix<float> m(static_cast<Eigen::Index>(r.height) * r.width, r.channels);
  std::copy(r.f32.begin(), r.f32.end(), m.data());
  return m;
}

void writeRaster(const std::filesystem::path& path, const Raster& r) { writeFileAtomic(path, encodeRaster(r)); }

Raster readRaster(const std::filesystem::path& path) {
  try {
    return decodeRaster(readFileBytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::byte> readFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> out(size);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size));
  return out;
}

void writeFileAtomic(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInput("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void writeTextAtomic(const std::filesystem::path& path, std::string_view text) {
  writeFileAtomic(path, std::as_bytes(std::span(text.data(), text.size())));
}

std::string readText(const std::filesystem::path& path) {
  const auto bytes = readFileBytes(path);
  return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

std::string sha256Hex(std::span<const std::byte> bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256File(const std::filesystem::path& path) { return sha256Hex(readFileBytes(path)); }

std::uint64_t deriveSeed(std::uint64_t root, std::string_view label) {
  // FNV-1a over the label, then one splitmix64 round to decorrelate.
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::uint64_t z = root ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string formatDouble(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

double parseDouble(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw FormatError("invalid number '" + std::string(text) + "'");
  return v;
}

std::vector<std::string> splitCsvLine(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string posesToCsv(std::span<const PoseRecord> poses) {
  std::ostringstream out;
  out << "frame_id,tx,ty,tz,qx,qy,qz,qw\n";
  for (const auto& rec : poses) {
    const Eigen::Quaterniond q = rec.pose.quaternion().normalized();
    const Vec3& t = rec.pose.translation;
    out << rec.frame_id << ',' << formatDouble(t.x()) << ',' << formatDouble(t.y()) << ',' << formatDouble(t.z()) << ','
        << formatDouble(q.x()) << ',' << formatDouble(q.y()) << ',' << formatDouble(q.z()) << ',' << formatDouble(q.w())
        << '\n';
  }
  return out.str();
}

std::vector<PoseRecord> posesFromCsv(std::string_view text) {
  const auto ls = lines(text);
  if (ls.empty() || ls.front() != "frame_id,tx,ty,tz,qx,qy,qz,qw") throw FormatError("poses: missing header");
  std::vector<PoseRecord> out;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto f = splitCsvLine(ls[i]);
    expectFields(f, 8, "poses");
    const Eigen::Quaterniond q(parseDouble(f[7]), parseDouble(f[4]), parseDouble(f[5]), parseDouble(f[6]));
    if (std::abs(q.norm() - 1.0) > 1e-6) throw FormatError("poses: quaternion is not unit norm");
    out.push_back({parseInt(f[0]), Pose::FromQuaternion(q, Vec3(parseDouble(f[1]), parseDouble(f[2]), parseDouble(f[3])))});
  }
  return out;
}

namespace {

void appendRow(std::ostringstream& out, double first, const Eigen::Ref<const Eigen::RowVectorXd>& rest) {
  out << formatDouble(first);
  for (Eigen::Index j = 0; j < rest.size(); ++j) out << ',' << formatDouble(rest(j));
  out << '\n';
}

Eigen::RowVectorXd parseRow(const std::string& line, std::size_t expected, const char* what) {
  const auto f = splitCsvLine(line);
  expectFields(f, expected, what);
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(f.size()));
  for (std::size_t j = 0; j < f.size(); ++j) row(static_cast<Eigen::Index>(j)) = parseDouble(f[j]);
  return row;
}

}  // namespace

std::string softmaxToCsv(const SoftmaxClassifier& m) {
  std::ostringstream out;
  out << "softmax," << m.dim() << ',' << m.numClasses() << '\n';
  for (int k = 0; k < m.numClasses(); ++k) appendRow(out, m.biases(k), m.weights.row(k));
  return out.str();
}

SoftmaxClassifier softmaxFromCsv(std::string_view text) {
  const auto ls = lines(text);
  if (ls.empty()) throw FormatError("softmax model: empty file");
  const auto h = splitCsvLine(ls[0]);
  if (h.size() != 3 || h[0] != "softmax") throw FormatError("softmax model: bad header");
  const int d = parseInt(h[1]);
  const int k = parseInt(h[2]);
  if (d < 1 || k < 2 || ls.size() != static_cast<std::size_t>(k) + 1) throw FormatError("softmax model: bad shape");
  SoftmaxClassifier m{Eigen::MatrixXd(k, d), Eigen::VectorXd(k)};
  for (int r = 0; r < k; ++r) {
    const auto row = parseRow(ls[static_cast<std::size_t>(r) + 1], static_cast<std::size_t>(d) + 1, "softmax model");
    m.biases(r) = row(0);
    m.weights.row(r) = row.tail(d);
  }
  return m;
}

std::string puToCsv(const PuClassifier& m) {
  std::ostringstream out;
  out << "pu," << m.label_model.dim() << ",1," << formatDouble(m.c) << '\n';
  appendRow(out, m.label_model.bias, m.label_model.weights.transpose());
  return out.str();
}

PuClassifier puFromCsv(std::string_view text) {
  const auto ls = lines(text);
  if (ls.size() != 2) throw FormatError("pu model: expected header and one weight row");
  const auto h = splitCsvLine(ls[0]);
  if (h.size() != 4 || h[0] != "pu" || h[2] != "1") throw FormatError("pu model: bad header");
  const int d = parseInt(h[1]);
  if (d < 1) throw FormatError("pu model: bad dimension");
  PuClassifier m;
  m.c = parseDouble(h[3]);
  if (!(m.c > 0) || m.c > 1) throw FormatError("pu model: c outside (0,1]");
  const auto row = parseRow(ls[1], static_cast<std::size_t>(d) + 1, "pu model");
  m.label_model.bias = row(0);
  m.label_model.weights = row.tail(d).transpose();
  return m;
}

std::string likelihoodsToCsv(const ClassLikelihood& cls, const TravLikelihood& trav) {
  std::ostringstream out;
  out << "class_likelihood," << kNumClasses << '\n';
  for (int r = 0; r < kNumClasses; ++r) appendRow(out, cls.table(r, 0), cls.table.row(r).tail(kNumClasses - 1));
  out << "trav_likelihood," << trav.bins() << '\n';
  for (int r = 0; r < 2; ++r) appendRow(out, trav.table(r, 0), trav.table.row(r).tail(trav.bins() - 1));
  return out.str();
}

std::pair<ClassLikelihood, TravLikelihood> likelihoodsFromCsv(std::string_view text) {
  const auto ls = lines(text);
  if (ls.size() != 7) throw FormatError("likelihoods: expected 7 lines");
  if (ls[0] != "class_likelihood,3") throw FormatError("likelihoods: bad class header");
  ClassLikelihood cls;
  for (int r = 0; r < kNumClasses; ++r) cls.table.row(r) = parseRow(ls[1 + static_cast<std::size_t>(r)], 3, "likelihoods");
  const auto h = splitCsvLine(ls[4]);
  if (h.size() != 2 || h[0] != "trav_likelihood") throw FormatError("likelihoods: bad trav header");
  const int bins = parseInt(h[1]);
  if (bins < 1) throw FormatError("likelihoods: bad bin count");
  TravLikelihood trav{Eigen::MatrixXd(2, bins)};
  for (int r = 0; r < 2; ++r)
    trav.table.row(r) = parseRow(ls[5 + static_cast<std::size_t>(r)], static_cast<std::size_t>(bins), "likelihoods");
  return {cls, trav};
}

std::string mapSnapshotToCsv(const SemanticVoxelMap& map) {
  std::ostringstream out;
  out << "ix,iy,iz,p_plant,p_artificial,p_ground,q,cx,cy,cz,count,miss\n";
  for (const auto& key : map.sortedKeys()) {
    const VoxelState& v = *map.find(key);
    const Vec3 c = v.centroid();
    out << key.ix << ',' << key.iy << ',' << key.iz;
    for (int k = 0; k < kNumClasses; ++k) out << ',' << formatDouble(v.class_posterior(k));
    out << ',' << formatDouble(v.trav_posterior) << ',' << formatDouble(c.x()) << ',' << formatDouble(c.y()) << ','
        << formatDouble(c.z()) << ',' << v.count << ',' << v.miss_count << '\n';
  }
  return out.str();
}

std::string cloudToCsv(std::span<const Vec3> cloud) {
  std::ostringstream out;
  out << "x,y,z\n";
  for (const Vec3& p : cloud) out << formatDouble(p.x()) << ',' << formatDouble(p.y()) << ',' << formatDouble(p.z()) << '\n';
  return out.str();
}

std::string keysToCsv(std::span<const VoxelKey> keys) {
  std::ostringstream out;
  out << "ix,iy,iz\n";
  for (const auto& k : keys) out << k.ix << ',' << k.iy << ',' << k.iz << '\n';
  return out.str();
}

}  // namespace travplant
