#pragma once

// Training data: synthetic sphere data with noisy linear labels, and CIFAR-10
// subsets normalized onto the radius-sqrt(d) sphere.

#include "rfrecon/numkit.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rfrecon {

/// Per-coordinate standardization plus per-row rescale applied to build X;
/// invert with `denormalize` to get pixel intensities in [0, 1].
struct Normalization {
  std::vector<double> mean;      // length d
  std::vector<double> std;       // length d, floored at 1e-6
  std::vector<double> row_scale; // length n: x_row = row_scale * standardized_row
};

struct DatasetMeta {
  std::string source;                     // "synthetic", "cifar-binary", "cifar-onehot"
  std::uint64_t seed = 0;
  std::vector<std::string> class_names;
  std::optional<Normalization> normalization;
};

struct Dataset {
  Matrix X; // n x d, rows with norm sqrt(d)
  Matrix Y; // n x k
  DatasetMeta meta;

  std::size_t n() const { return X.rows(); }
  std::size_t d() const { return X.cols(); }
  std::size_t k() const { return Y.cols(); }
  /// Throws PreconditionError if a row is off the sphere or Y is non-finite.
  void validate() const;
};

/// n rows uniform on the radius-sqrt(d) sphere (Gaussian draw, then rescale).
Matrix sphere_uniform(RngStream &rng, std::size_t n, std::size_t d);

/// Y = X g + eps with g ~ N(0, 1/d) and eps ~ N(0, noise_variance). n x 1.
Matrix noisy_linear_labels(RngStream &rng, const Matrix &X, double noise_variance = 0.25);
/// Deterministic form with explicit g and noise (length n).
Matrix noisy_linear_labels(const Matrix &X, std::span<const double> g,
                           std::span<const double> noise);

/// Labels cycling through k classes (row i gets class i mod k), one-hot.
Matrix cyclic_one_hot(std::size_t n, std::size_t k);

Dataset synthetic_dataset(std::uint64_t seed, std::size_t n, std::size_t d, std::size_t k = 1);

// ---------------------------------------------------------------------------
// CIFAR-10

inline constexpr std::size_t kCifarPixels = 3072;
inline constexpr std::size_t kCifarRecordBytes = 3073;
inline const std::array<const char *, 10> kCifarClassNames = {
    "airplane", "automobile", "bird", "cat", "deer",
    "dog",      "frog",       "horse", "ship", "truck"};

struct CifarRecord {
  std::uint8_t label = 0;
  std::array<std::uint8_t, kCifarPixels> pixels{}; // R plane, G plane, B plane

  friend bool operator==(const CifarRecord &, const CifarRecord &) = default;
};

/// Throws FormatError if the length is not a multiple of 3073 or a label byte
/// is above 9.
std::vector<CifarRecord> parse_cifar_batch(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_cifar_batch(std::span<const CifarRecord> records);
/// Reads data_batch_1.bin .. data_batch_5.bin (whichever exist, in order) or a
/// single batch file.
std::vector<CifarRecord> load_cifar(const std::filesystem::path &path);

/// First n/2 records of class_a (label -1), then first n/2 of class_b (+1).
Dataset build_cifar_subset(std::span<const CifarRecord> records, int class_a, int class_b,
                           std::size_t n);
/// per_class records of each listed class (in class order), one-hot over 10.
Dataset one_hot_labels(std::span<const CifarRecord> records, std::span<const int> classes,
                       std::size_t per_class);

/// Pixels scaled to [0, 1], standardized with the subset statistics, then
/// each row rescaled to norm sqrt(d). Returns X and fills `norm`.
Matrix normalize_pixels(const Matrix &pixels01, Normalization &norm);
/// Row i of x back to [0, 1] pixel space (without clamping).
std::vector<double> denormalize(const Normalization &norm, std::span<const double> x,
                                std::size_t row_index);

// ---------------------------------------------------------------------------
// Files

/// u64 little-endian header length, JSON header, then X then Y as raw
/// little-endian doubles.
void save_dataset(const Dataset &ds, const std::filesystem::path &path);
Dataset load_dataset(const std::filesystem::path &path);

/// Binary PPM (P6).
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;
};

/// Renders a row: d = 3072 as a 32x32 RGB image from planar channels, other d
/// as a grayscale square (zero padded). Values are pixel intensities in
/// [0, 1]; clamped to [0, 255] after scaling.
Image row_image(std::span<const double> pixels01);
/// Tiles images row-major into a grid with a 1-pixel gap.
Image tile_images(std::span<const Image> images, std::size_t columns);
void write_ppm(const Image &img, const std::filesystem::path &path);

} // namespace rfrecon
