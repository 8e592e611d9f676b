#ifndef TRAVPLANT_CONFIG_HPP
#define TRAVPLANT_CONFIG_HPP

#include "travplant/navsim.hpp"
#include "travplant/pixelnet.hpp"
#include "travplant/pu.hpp"
#include "travplant/synthworld.hpp"
#include "travplant/voxelfusion.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace travplant {

/// Flat key=value run configuration. Every key has a default; unknown keys
/// and values that do not parse as the key's type are rejected.
class RunConfig {
 public:
  RunConfig();

  /// Lines of `key = value`; blank lines and text after '#' are ignored.
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  /// Applies "key=value".
  void apply(std::string_view assignment);

  const std::string& get(const std::string& key) const;
  double getDouble(const std::string& key) const;
  long long getInt(const std::string& key) const;
  std::uint64_t getSeed() const;
  bool getBool(const std::string& key) const;

  /// Every key in lexicographic order, one `key=value` per line.
  std::string resolved() const;

  static std::vector<std::string> knownKeys();

  ScenarioConfig scenario() const;
  TrainHyper trainHyper() const;
  TemOptions temOptions() const;
  PseudoLabelNoise noise() const;
  FusionParams fusion() const;
  int travBins() const;
  int thresholdCount() const;
  NavParams navParams() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace travplant

#endif  // TRAVPLANT_CONFIG_HPP
