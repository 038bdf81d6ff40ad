// Training data: PGM ingestion, seeded synthetic generators, and image export.
#pragma once

#include "frameflow/sampler.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace frameflow {

enum class Normalization { none, per_image, global01 };

Normalization parse_normalization(const std::string& name);
std::string to_string(Normalization n);

struct Dataset {
  std::vector<Signal> items;
  Normalization normalization = Normalization::none;
  std::string source;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  const Shape& shape() const { return items.front().shape(); }
  /// Non-empty with uniform shapes.
  void validate() const;

  /// per_image: zero mean, unit std per item. global01: divide by full_scale
  /// when given (e.g. a PGM maxval), else map the dataset's min..max to [0, 1].
  /// Throws if a normalization was already applied.
  void normalize(Normalization kind, std::optional<double> full_scale = std::nullopt);
};

/// 8- or 16-bit binary PGM (P5).
struct GrayImage {
  Index width = 0;
  Index height = 0;
  int max_value = 255;
  std::vector<double> pixels;  // row-major
};

GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Largest centered window with the target aspect ratio, then bilinear
/// resampling with half-pixel centers.
Signal crop_and_resize(const GrayImage& image, Index rows, Index cols);

/// All *.pgm files in lexicographic order, cropped and resized to `shape`
/// (rank 2), then normalized.
Dataset load_images(const std::filesystem::path& dir, const Shape& shape, Normalization normalization);

/// stripes | checker | noise
Dataset synth_texture(const std::string& kind, const Shape& shape, std::uint64_t seed, std::size_t count);

struct MixtureComponent {
  double mean = 0;
  double std_dev = 1;
  double weight = 1;
};

/// Each item picks one component by weight and fills every entry i.i.d. from it.
Dataset gaussian_mixture(Index dim, const std::vector<MixtureComponent>& components, std::uint64_t seed,
                         std::size_t count);

struct GridMapping {
  double lo = 0;
  double hi = 0;
  double scale = 1;  // pixel = (value - lo) * scale
};

/// Tiles rank-2 signals (rank-1 shown as single rows) into one 8-bit PGM with
/// 1-pixel separators; values are mapped affinely from the batch's range to
/// [0, 255]. The mapping is written next to the image as `<path>.map.txt`.
GridMapping export_sample_grid(const std::vector<Signal>& batch, const std::filesystem::path& path,
                               std::size_t columns = 0);

/// Writes `contents` to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace frameflow
