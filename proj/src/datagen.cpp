#include "rfrecon/datagen.hpp"

#include "rfrecon/binio.hpp"
#include "rfrecon/errors.hpp"
#include "rfrecon/features.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace rfrecon {

namespace binio {

std::vector<std::uint8_t> read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string &path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw Error("write to '" + path + "' failed");
}

} // namespace binio

void Dataset::validate() const {
  if (Y.rows() != X.rows())
    throw ShapeError("Dataset: X has " + std::to_string(X.rows()) + " rows, Y has " +
                     std::to_string(Y.rows()));
  require_sphere_rows(X);
  if (!Y.all_finite())
    throw PreconditionError("Dataset: non-finite label");
}

Matrix sphere_uniform(RngStream &rng, std::size_t n, std::size_t d) {
  Matrix x = gaussian_matrix(rng, n, d, 1.0);
  const double radius = std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    auto row = x.row(i);
    const double nrm = norm2(row);
    for (double &v : row)
      v = v / nrm * radius;
  }
  return x;
}

Matrix noisy_linear_labels(const Matrix &X, std::span<const double> g,
                           std::span<const double> noise) {
  if (g.size() != X.cols() || noise.size() != X.rows())
    throw ShapeError("noisy_linear_labels: g must have length d and noise length n");
  Matrix y(X.rows(), 1);
  for (std::size_t i = 0; i < X.rows(); ++i)
    y(i, 0) = dot(X.row(i), g) + noise[i];
  return y;
}

Matrix noisy_linear_labels(RngStream &rng, const Matrix &X, double noise_variance) {
  const double d = static_cast<double>(X.cols());
  Vector g(X.cols()), eps(X.rows());
  for (double &v : g)
    v = rng.normal() / std::sqrt(d);
  const double sd = std::sqrt(noise_variance);
  for (double &v : eps)
    v = sd * rng.normal();
  return noisy_linear_labels(X, g, eps);
}

Matrix cyclic_one_hot(std::size_t n, std::size_t k) {
  Matrix y(n, k);
  for (std::size_t i = 0; i < n; ++i)
    y(i, i % k) = 1.0;
  return y;
}

Dataset synthetic_dataset(std::uint64_t seed, std::size_t n, std::size_t d, std::size_t k) {
  RngStream base(seed);
  RngStream xs = base.derive(1);
  RngStream ys = base.derive(2);
  Dataset ds;
  ds.X = sphere_uniform(xs, n, d);
  ds.Y = k <= 1 ? noisy_linear_labels(ys, ds.X) : cyclic_one_hot(n, k);
  ds.meta.source = "synthetic";
  ds.meta.seed = seed;
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------
// CIFAR-10

std::vector<CifarRecord> parse_cifar_batch(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kCifarRecordBytes != 0)
    throw FormatError("CIFAR batch length " + std::to_string(bytes.size()) +
                          " is not a multiple of 3073",
                      bytes.size() - bytes.size() % kCifarRecordBytes);
  std::vector<CifarRecord> out(bytes.size() / kCifarRecordBytes);
  for (std::size_t r = 0; r < out.size(); ++r) {
    const std::size_t off = r * kCifarRecordBytes;
    if (bytes[off] > 9)
      throw FormatError("CIFAR label " + std::to_string(bytes[off]) + " out of range", off);
    out[r].label = bytes[off];
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(off + 1), kCifarPixels,
                out[r].pixels.begin());
  }
  return out;
}

std::vector<std::uint8_t> serialize_cifar_batch(std::span<const CifarRecord> records) {
  std::vector<std::uint8_t> out;
  out.reserve(records.size() * kCifarRecordBytes);
  for (const auto &r : records) {
    out.push_back(r.label);
    out.insert(out.end(), r.pixels.begin(), r.pixels.end());
  }
  return out;
}

std::vector<CifarRecord> load_cifar(const std::filesystem::path &path) {
  std::vector<CifarRecord> all;
  if (std::filesystem::is_directory(path)) {
    for (int b = 1; b <= 5; ++b) {
      const auto file = path / ("data_batch_" + std::to_string(b) + ".bin");
      if (!std::filesystem::exists(file))
        continue;
      auto recs = parse_cifar_batch(binio::read_file(file.string()));
      all.insert(all.end(), recs.begin(), recs.end());
    }
    if (all.empty())
      throw Error("no data_batch_*.bin files under " + path.string());
    return all;
  }
  return parse_cifar_batch(binio::read_file(path.string()));
}

Matrix normalize_pixels(const Matrix &pixels01, Normalization &norm) {
  const std::size_t n = pixels01.rows(), d = pixels01.cols();
  norm.mean.assign(d, 0.0);
  norm.std.assign(d, 0.0);
  norm.row_scale.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c)
      norm.mean[c] += pixels01(i, c);
  for (double &m : norm.mean)
    m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = pixels01(i, c) - norm.mean[c];
      norm.std[c] += dv * dv;
    }
  for (double &s : norm.std)
    s = std::max(std::sqrt(s / static_cast<double>(n)), 1e-6);

  Matrix x(n, d);
  const double radius = std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    auto row = x.row(i);
    for (std::size_t c = 0; c < d; ++c)
      row[c] = (pixels01(i, c) - norm.mean[c]) / norm.std[c];
    const double nrm = norm2(row);
    // A row equal to the subset mean has no direction; give it a constant one.
    if (nrm == 0.0)
      std::fill(row.begin(), row.end(), 1.0);
    const double scale = radius / (nrm == 0.0 ? radius : nrm);
    norm.row_scale[i] = nrm == 0.0 ? 0.0 : scale;
    for (double &v : row)
      v *= scale;
  }
  return x;
}

std::vector<double> denormalize(const Normalization &norm, std::span<const double> x,
                                std::size_t row_index) {
  if (x.size() != norm.mean.size())
    throw ShapeError("denormalize: row length does not match normalization");
  // Reconstructions are unmatched to a specific training row; fall back to the
  // mean row scale when the index is out of range.
  double scale = 0.0;
  if (row_index < norm.row_scale.size()) {
    scale = norm.row_scale[row_index];
  } else if (!norm.row_scale.empty()) {
    for (double s : norm.row_scale)
      scale += s;
    scale /= static_cast<double>(norm.row_scale.size());
  }
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double standardized = scale > 0.0 ? x[c] / scale : 0.0;
    out[c] = standardized * norm.std[c] + norm.mean[c];
  }
  return out;
}

namespace {

Dataset subset_from(const std::vector<const CifarRecord *> &picked, Matrix Y,
                    std::string source, std::vector<std::string> class_names) {
  Matrix pixels(picked.size(), kCifarPixels);
  for (std::size_t i = 0; i < picked.size(); ++i)
    for (std::size_t c = 0; c < kCifarPixels; ++c)
      pixels(i, c) = picked[i]->pixels[c] / 255.0;
  Dataset ds;
  Normalization norm;
  ds.X = normalize_pixels(pixels, norm);
  ds.Y = std::move(Y);
  ds.meta.source = std::move(source);
  ds.meta.class_names = std::move(class_names);
  ds.meta.normalization = std::move(norm);
  ds.validate();
  return ds;
}

std::vector<const CifarRecord *> first_of_class(std::span<const CifarRecord> records,
                                                int cls, std::size_t count) {
  std::vector<const CifarRecord *> out;
  std::size_t seen = 0;
  for (const auto &r : records)
    if (r.label == cls) {
      ++seen;
      if (out.size() < count)
        out.push_back(&r);
    }
  if (out.size() < count)
    throw PreconditionError("CIFAR subset: class " + std::to_string(cls) + " has " +
                            std::to_string(seen) + " records, need " + std::to_string(count));
  return out;
}

void check_class(int c) {
  if (c < 0 || c > 9)
    throw PreconditionError("CIFAR class index " + std::to_string(c) + " out of range");
}

} // namespace

Dataset build_cifar_subset(std::span<const CifarRecord> records, int class_a, int class_b,
                           std::size_t n) {
  check_class(class_a);
  check_class(class_b);
  if (n == 0 || n % 2 != 0)
    throw PreconditionError("build_cifar_subset: n must be even and positive");
  auto picked = first_of_class(records, class_a, n / 2);
  const auto pos = first_of_class(records, class_b, n / 2);
  picked.insert(picked.end(), pos.begin(), pos.end());
  Matrix y(n, 1);
  for (std::size_t i = 0; i < n; ++i)
    y(i, 0) = i < n / 2 ? -1.0 : 1.0;
  return subset_from(picked, std::move(y), "cifar-binary",
                     {kCifarClassNames[class_a], kCifarClassNames[class_b]});
}

Dataset one_hot_labels(std::span<const CifarRecord> records, std::span<const int> classes,
                       std::size_t per_class) {
  if (classes.empty() || per_class == 0)
    throw PreconditionError("one_hot_labels: need at least one class and per_class >= 1");
  std::vector<const CifarRecord *> picked;
  std::vector<std::string> names;
  for (int c : classes) {
    check_class(c);
    const auto got = first_of_class(records, c, per_class);
    picked.insert(picked.end(), got.begin(), got.end());
    names.emplace_back(kCifarClassNames[c]);
  }
  Matrix y(picked.size(), 10);
  for (std::size_t i = 0; i < picked.size(); ++i)
    y(i, picked[i]->label) = 1.0;
  return subset_from(picked, std::move(y), "cifar-onehot", std::move(names));
}

// ---------------------------------------------------------------------------
// Dataset files

void save_dataset(const Dataset &ds, const std::filesystem::path &path) {
  nlohmann::json h;
  h["format"] = "rfrecon-dataset";
  h["version"] = 1;
  h["n"] = ds.X.rows();
  h["d"] = ds.X.cols();
  h["k"] = ds.Y.cols();
  h["source"] = ds.meta.source;
  h["seed"] = ds.meta.seed;
  h["class_names"] = ds.meta.class_names;
  if (ds.meta.normalization) {
    h["normalization"] = {{"order", "standardize-then-renormalize"},
                          {"mean", ds.meta.normalization->mean},
                          {"std", ds.meta.normalization->std},
                          {"row_scale", ds.meta.normalization->row_scale}};
  }
  const std::string header = h.dump();
  binio::Writer w;
  w.put<std::uint64_t>(header.size());
  w.put_string(header);
  w.put_doubles(ds.X.flat());
  w.put_doubles(ds.Y.flat());
  binio::write_file(path.string(), w.bytes());
}

Dataset load_dataset(const std::filesystem::path &path) {
  const auto bytes = binio::read_file(path.string());
  binio::Reader r(bytes);
  const auto hlen = r.get<std::uint64_t>();
  if (hlen > r.remaining())
    throw FormatError("dataset header length exceeds file size", r.offset());
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(r.get_string(hlen));
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("dataset header is not JSON: ") + e.what(), 8);
  }
  if (h.value("format", "") != "rfrecon-dataset")
    throw FormatError("not an rfrecon dataset file", 8);
  const std::size_t n = h.at("n"), d = h.at("d"), k = h.at("k");
  Dataset ds;
  ds.X = Matrix(n, d, r.get_doubles(n * d));
  ds.Y = Matrix(n, k, r.get_doubles(n * k));
  ds.meta.source = h.value("source", "");
  ds.meta.seed = h.value("seed", std::uint64_t{0});
  ds.meta.class_names = h.value("class_names", std::vector<std::string>{});
  if (h.contains("normalization")) {
    Normalization norm;
    norm.mean = h["normalization"].at("mean").get<std::vector<double>>();
    norm.std = h["normalization"].at("std").get<std::vector<double>>();
    norm.row_scale = h["normalization"].at("row_scale").get<std::vector<double>>();
    ds.meta.normalization = std::move(norm);
  }
  if (r.remaining() != 0)
    throw FormatError("trailing bytes after dataset payload", r.offset());
  return ds;
}

// ---------------------------------------------------------------------------
// Images

Image row_image(std::span<const double> pixels01) {
  const auto to_byte = [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::round(v * 255.0), 0.0, 255.0));
  };
  Image img;
  if (pixels01.size() == kCifarPixels) {
    img.width = img.height = 32;
    img.rgb.resize(32 * 32 * 3);
    for (std::size_t px = 0; px < 1024; ++px)
      for (std::size_t ch = 0; ch < 3; ++ch)
        img.rgb[px * 3 + ch] = to_byte(pixels01[ch * 1024 + px]);
    return img;
  }
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(pixels01.size()))));
  img.width = img.height = std::max<std::size_t>(side, 1);
  img.rgb.assign(img.width * img.height * 3, 0);
  for (std::size_t i = 0; i < pixels01.size(); ++i) {
    const auto b = to_byte(pixels01[i]);
    img.rgb[i * 3] = img.rgb[i * 3 + 1] = img.rgb[i * 3 + 2] = b;
  }
  return img;
}

Image tile_images(std::span<const Image> images, std::size_t columns) {
  Image out;
  if (images.empty() || columns == 0)
    return out;
  const std::size_t w = images.front().width, h = images.front().height;
  const std::size_t rows = (images.size() + columns - 1) / columns;
  out.width = columns * (w + 1) - 1;
  out.height = rows * (h + 1) - 1;
  out.rgb.assign(out.width * out.height * 3, 255);
  for (std::size_t k = 0; k < images.size(); ++k) {
    if (images[k].width != w || images[k].height != h)
      throw ShapeError("tile_images: images differ in size");
    const std::size_t ox = (k % columns) * (w + 1), oy = (k / columns) * (h + 1);
    for (std::size_t y = 0; y < h; ++y)
      std::copy_n(images[k].rgb.begin() + static_cast<std::ptrdiff_t>(y * w * 3), w * 3,
                  out.rgb.begin() + static_cast<std::ptrdiff_t>(((oy + y) * out.width + ox) * 3));
  }
  return out;
}

void write_ppm(const Image &img, const std::filesystem::path &path) {
  binio::Writer w;
  w.put_string("P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n");
  w.put_bytes(img.rgb);
  binio::write_file(path.string(), w.bytes());
}

} // namespace rfrecon
