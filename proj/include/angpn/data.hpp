#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "angpn/matrix.hpp"

namespace angpn {

struct Dataset {
  Matrix features;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;
  std::string name;

  std::size_t n() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }
  /// Throws DataError unless labels align, lie in [0, c), cover every class,
  /// and all features are finite.
  void validate() const;
};

/// Header-less CSV features (one point per row) plus one integer label per line.
Dataset load_csv(const std::filesystem::path& features, const std::filesystem::path& labels);
void save_csv(const Dataset& ds, const std::filesystem::path& features,
              const std::filesystem::path& labels);

/// Packed binary: "ANGD1\0\0\0", u64 n, u64 d, u64 c, n*d f64 row-major,
/// n u64 labels; all little-endian.
Dataset load_packed(const std::filesystem::path& path);
void save_packed(const Dataset& ds, const std::filesystem::path& path);

/// Packed binary when the file starts with the packed magic, CSV otherwise
/// (then `labels` is required).
Dataset load_dataset(const std::filesystem::path& features, const std::filesystem::path& labels);

struct LabeledSplit {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  std::vector<std::size_t> test_idx;
  std::vector<std::size_t> labels;  // class id of every point
  std::size_t class_count = 0;
  Matrix one_hot;  // n x c; rows outside train_idx are zero

  void validate() const;
};

/// Builds a split from explicit index sets.
LabeledSplit make_split(std::vector<std::size_t> labels, std::size_t class_count,
                        std::vector<std::size_t> train_idx, std::vector<std::size_t> val_idx,
                        std::vector<std::size_t> test_idx);

/// Per class: ceil(label_rate * n_c) points to train, ceil(val_rate * n_c)
/// further points to validation, the rest to test.
LabeledSplit stratified_split(const Dataset& ds, double label_rate, double val_rate,
                              std::uint64_t seed);

/// Optional feature preprocessing. The network has no bias terms, so it is
/// positively homogeneous in its input. A constant column acts as a first-layer
/// offset, and hidden units can carry it further.
struct FeatureTransform {
  bool standardize = false;  // per-column zero mean, unit population std
  bool constant = false;     // append a column of ones after standardizing
};

/// Columns with zero spread are centered but not scaled.
Matrix transform_features(const Matrix& x, const FeatureTransform& t);

/// Isotropic Gaussian clouds, class-major order; one class per center row.
Dataset gen_blobs(std::size_t n_per_class, const Matrix& centers, double noise_sigma,
                  std::uint64_t seed);

/// Class 0 at (cos t, sin t), class 1 at (1 - cos t, 0.5 - sin t), t ~ U[0, pi],
/// plus Gaussian noise.
Dataset gen_two_moons(std::size_t n_per_class, double noise_sigma, std::uint64_t seed);

}  // namespace angpn
