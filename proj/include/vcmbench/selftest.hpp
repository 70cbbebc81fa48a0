#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vcmbench/datamodel.hpp"
#include "vcmbench/detection_metrics.hpp"
#include "vcmbench/image_io.hpp"
#include "vcmbench/rd_pipeline.hpp"

namespace vcmbench {

// Small deterministic generator; identical sequences on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi);  // inclusive

 private:
  std::uint64_t state_;
};

std::uint64_t stable_hash(std::string_view s, std::uint64_t seed = 0);

struct SyntheticDataset {
  std::vector<std::filesystem::path> images;
  GroundTruthSet gt;
};

// Textured road-scene stand-ins: colored polygons over a noisy gradient,
// annotated with polygon ground truth (and the odd ignore region).
SyntheticDataset write_synthetic_dataset(const std::filesystem::path& dir, int n_images, int width, int height,
                                         std::uint64_t seed);

// Detector stand-in whose localization error grows with the codec error
// inside each object and shrinks with the method's robustness.
struct SyntheticMethod {
  std::string name;
  double sensitivity = 1.0;
  double base_jitter = 0.03;
};

DetectionSet synthesize_detections(const GroundTruthSet& gt, const std::map<std::string, Image>& pristine,
                                   const std::map<std::string, Image>& decoded, const SyntheticMethod& method,
                                   IouKind kind, std::uint64_t seed);

struct SelftestOptions {
  std::filesystem::path out_dir;
  std::filesystem::path codec_dir;  // where vcm-mock-codec lives; empty: PATH lookup
  int parallelism = 1;
  int n_images = 8;
  std::uint64_t seed = 2021;
};

struct SelftestResult {
  ComparisonReport report;
  std::vector<std::filesystem::path> report_files;
  std::size_t executed = 0;
  std::size_t cache_hits = 0;
};

// Images -> mock codec sweep -> manifests -> synthetic detections -> cells
// -> BD report, all under out_dir.
SelftestResult run_selftest(const SelftestOptions& opts);

}  // namespace vcmbench
