#include "angpn/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string_view>

#include "angpn/errors.hpp"
#include "angpn/io.hpp"
#include "angpn/rng.hpp"

namespace angpn {

namespace {

constexpr std::array<char, 8> kPackedMagic = {'A', 'N', 'G', 'D', '1', '\0', '\0', '\0'};

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

std::size_t class_count_of(const std::vector<std::size_t>& labels) {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

}  // namespace

void Dataset::validate() const {
  if (features.empty()) throw DataError(name + ": no feature rows");
  if (labels.size() != features.rows()) {
    throw DataError(name + ": " + std::to_string(features.rows()) + " feature rows but " +
                    std::to_string(labels.size()) + " labels");
  }
  if (!all_finite(features)) throw DataError(name + ": non-finite feature entries");
  std::vector<std::size_t> counts(class_count, 0);
  for (std::size_t y : labels) {
    if (y >= class_count) throw DataError(name + ": label " + std::to_string(y) + " out of range");
    ++counts[y];
  }
  for (std::size_t c = 0; c < class_count; ++c) {
    if (counts[c] == 0) throw DataError(name + ": class " + std::to_string(c) + " is empty");
  }
}

Dataset load_csv(const std::filesystem::path& features, const std::filesystem::path& labels) {
  std::ifstream fin = open_input(features);
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  for (std::size_t lineno = 1; std::getline(fin, line); ++lineno) {
    if (blank(line)) continue;
    std::size_t fields = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view cell = rest.substr(0, comma);
      double v = 0.0;
      if (!parse_double(cell, v)) {
        throw DataError(features.string() + ": line " + std::to_string(lineno) +
                        ": non-numeric cell '" + std::string(cell) + "'");
      }
      if (!std::isfinite(v)) {
        throw DataError(features.string() + ": line " + std::to_string(lineno) +
                        ": non-finite value");
      }
      values.push_back(v);
      ++fields;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      cols = fields;
    } else if (fields != cols) {
      throw DataError(features.string() + ": line " + std::to_string(lineno) + ": expected " +
                      std::to_string(cols) + " fields, got " + std::to_string(fields));
    }
    ++rows;
  }
  if (rows == 0) throw DataError(features.string() + ": no rows");

  std::ifstream lin = open_input(labels);
  std::vector<std::size_t> ys;
  for (std::size_t lineno = 1; std::getline(lin, line); ++lineno) {
    if (blank(line)) continue;
    std::string_view cell(line);
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.remove_suffix(1);
    while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
    std::size_t y = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), y);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
      throw DataError(labels.string() + ": line " + std::to_string(lineno) +
                      ": expected a nonnegative integer label");
    }
    ys.push_back(y);
  }
  if (ys.size() != rows) {
    throw DataError("row-count mismatch: " + features.string() + " has " + std::to_string(rows) +
                    " rows, " + labels.string() + " has " + std::to_string(ys.size()));
  }

  Dataset ds{Matrix(rows, cols, std::move(values)), std::move(ys), 0, features.stem().string()};
  ds.class_count = class_count_of(ds.labels);
  ds.validate();
  return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& features,
              const std::filesystem::path& labels) {
  std::ofstream fout(features);
  if (!fout) throw DataError("cannot write " + features.string());
  write_matrix_csv(fout, ds.features);
  std::ofstream lout(labels);
  if (!lout) throw DataError("cannot write " + labels.string());
  for (std::size_t y : ds.labels) lout << y << '\n';
}

Dataset load_packed(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, std::ios::binary);
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kPackedMagic) {
    throw DataError(path.string() + ": not a packed dataset (bad magic)");
  }
  const std::uint64_t n = read_u64_le(in);
  const std::uint64_t d = read_u64_le(in);
  const std::uint64_t c = read_u64_le(in);
  if (n == 0 || d == 0 || n > (1ull << 32) || d > (1ull << 32)) {
    throw DataError(path.string() + ": implausible dimensions");
  }
  std::vector<double> values(n * d);
  for (double& v : values) v = read_f64_le(in);
  std::vector<std::size_t> ys(n);
  for (std::size_t& y : ys) y = static_cast<std::size_t>(read_u64_le(in));
  Dataset ds{Matrix(n, d, std::move(values)), std::move(ys), static_cast<std::size_t>(c),
             path.stem().string()};
  ds.validate();
  return ds;
}

void save_packed(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kPackedMagic.data(), kPackedMagic.size());
  write_u64_le(out, ds.n());
  write_u64_le(out, ds.dim());
  write_u64_le(out, ds.class_count);
  for (double v : ds.features.values()) write_f64_le(out, v);
  for (std::size_t y : ds.labels) write_u64_le(out, y);
}

Dataset load_dataset(const std::filesystem::path& features, const std::filesystem::path& labels) {
  {
    std::ifstream probe = open_input(features, std::ios::binary);
    std::array<char, 8> head{};
    if (probe.read(head.data(), head.size()) && head == kPackedMagic) return load_packed(features);
  }
  if (labels.empty()) throw DataError(features.string() + ": CSV features need a labels file");
  return load_csv(features, labels);
}

void LabeledSplit::validate() const {
  const std::size_t n = labels.size();
  std::vector<char> seen(n, 0);
  for (const auto* set : {&train_idx, &val_idx, &test_idx}) {
    for (std::size_t i : *set) {
      if (i >= n) throw DataError("split index " + std::to_string(i) + " out of range");
      if (seen[i]) throw DataError("split index " + std::to_string(i) + " appears twice");
      seen[i] = 1;
    }
  }
  if (train_idx.empty()) throw DataError("split has no training points");
  std::vector<char> present(class_count, 0);
  for (std::size_t i : train_idx) present[labels[i]] = 1;
  for (std::size_t c = 0; c < class_count; ++c) {
    if (!present[c]) throw DataError("class " + std::to_string(c) + " missing from training set");
  }
}

LabeledSplit make_split(std::vector<std::size_t> labels, std::size_t class_count,
                        std::vector<std::size_t> train_idx, std::vector<std::size_t> val_idx,
                        std::vector<std::size_t> test_idx) {
  for (std::size_t y : labels) {
    if (y >= class_count) throw DataError("label " + std::to_string(y) + " out of range");
  }
  LabeledSplit split;
  split.labels = std::move(labels);
  split.class_count = class_count;
  split.train_idx = std::move(train_idx);
  split.val_idx = std::move(val_idx);
  split.test_idx = std::move(test_idx);
  split.validate();
  split.one_hot = Matrix(split.labels.size(), class_count);
  for (std::size_t i : split.train_idx) split.one_hot(i, split.labels[i]) = 1.0;
  return split;
}

LabeledSplit stratified_split(const Dataset& ds, double label_rate, double val_rate,
                              std::uint64_t seed) {
  ds.validate();
  if (!(label_rate > 0.0 && label_rate < 1.0)) {
    throw ParameterError("label rate must lie in (0, 1), got " + std::to_string(label_rate));
  }
  if (!(val_rate >= 0.0) || label_rate + val_rate >= 1.0) {
    throw DataError("label rate + validation rate must be < 1");
  }
  // Guard ceil() against products like 0.3 * 10 = 3.0000000000000004.
  const auto take = [](double rate, std::size_t count) {
    return static_cast<std::size_t>(std::ceil(rate * static_cast<double>(count) - 1e-9));
  };

  Rng rng = Rng::stream(seed, streams::split);
  std::vector<std::size_t> train, val, test;
  for (std::size_t c = 0; c < ds.class_count; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ds.n(); ++i) {
      if (ds.labels[i] == c) members.push_back(i);
    }
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.index(i)]);
    const std::size_t n_train = take(label_rate, members.size());
    const std::size_t n_val = take(val_rate, members.size());
    if (n_train < 1) throw DataError("class " + std::to_string(c) + " cannot supply a training point");
    if (n_train + n_val > members.size()) {
      throw DataError("class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                      " points, too few for the requested rates");
    }
    train.insert(train.end(), members.begin(), members.begin() + n_train);
    val.insert(val.end(), members.begin() + n_train, members.begin() + n_train + n_val);
    test.insert(test.end(), members.begin() + n_train + n_val, members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  std::sort(test.begin(), test.end());
  return make_split(ds.labels, ds.class_count, std::move(train), std::move(val), std::move(test));
}

Matrix transform_features(const Matrix& x, const FeatureTransform& t) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 1) throw ShapeError("transform_features: no rows");
  Matrix out(n, d + (t.constant ? 1 : 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out(i, j) = x(i, j);
  if (t.standardize) {
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
      const double sd = std::sqrt(var / static_cast<double>(n));
      for (std::size_t i = 0; i < n; ++i) {
        out(i, j) = sd > 0.0 ? (x(i, j) - mean) / sd : x(i, j) - mean;
      }
    }
  }
  if (t.constant) {
    for (std::size_t i = 0; i < n; ++i) out(i, d) = 1.0;
  }
  return out;
}

Dataset gen_blobs(std::size_t n_per_class, const Matrix& centers, double noise_sigma,
                  std::uint64_t seed) {
  if (centers.rows() < 2) throw ParameterError("gen_blobs: need at least two centers");
  if (!(noise_sigma >= 0.0)) throw ParameterError("gen_blobs: noise sigma must be >= 0");
  if (n_per_class < 1) throw ParameterError("gen_blobs: n_per_class must be >= 1");
  const std::size_t c = centers.rows();
  const std::size_t d = centers.cols();
  Rng rng = Rng::stream(seed, streams::data);
  Dataset ds{Matrix(c * n_per_class, d), std::vector<std::size_t>(c * n_per_class), c, "blobs"};
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t p = 0; p < n_per_class; ++p) {
      const std::size_t i = k * n_per_class + p;
      ds.labels[i] = k;
      for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = centers(k, j) + noise_sigma * rng.normal();
    }
  }
  return ds;
}

Dataset gen_two_moons(std::size_t n_per_class, double noise_sigma, std::uint64_t seed) {
  if (n_per_class < 2) throw ParameterError("gen_two_moons: n_per_class must be >= 2");
  if (!(noise_sigma >= 0.0)) throw ParameterError("gen_two_moons: noise sigma must be >= 0");
  Rng rng = Rng::stream(seed, streams::data);
  Dataset ds{Matrix(2 * n_per_class, 2), std::vector<std::size_t>(2 * n_per_class), 2, "two_moons"};
  constexpr double pi = 3.14159265358979323846;
  for (std::size_t cls = 0; cls < 2; ++cls) {
    for (std::size_t p = 0; p < n_per_class; ++p) {
      const std::size_t i = cls * n_per_class + p;
      const double t = pi * rng.uniform();
      double x = std::cos(t);
      double y = std::sin(t);
      if (cls == 1) {
        x = 1.0 - x;
        y = 0.5 - y;
      }
      ds.features(i, 0) = x + noise_sigma * rng.normal();
      ds.features(i, 1) = y + noise_sigma * rng.normal();
      ds.labels[i] = cls;
    }
  }
  return ds;
}

}  // namespace angpn
