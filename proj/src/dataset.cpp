#include "frameflow/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace frameflow {

namespace fs = std::filesystem;

Normalization parse_normalization(const std::string& name) {
  if (name == "none") return Normalization::none;
  if (name == "per_image") return Normalization::per_image;
  if (name == "global01") return Normalization::global01;
  throw std::invalid_argument("unknown normalization '" + name + "' (none, per_image, global01)");
}

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::none: return "none";
    case Normalization::per_image: return "per_image";
    case Normalization::global01: return "global01";
  }
  return "none";
}

void Dataset::validate() const {
  if (items.empty()) throw std::invalid_argument("dataset is empty");
  for (const auto& x : items)
    if (x.shape() != items.front().shape()) throw ShapeError("dataset items must share one shape");
}

void Dataset::normalize(Normalization kind, std::optional<double> full_scale) {
  if (normalization != Normalization::none) throw std::logic_error("dataset normalization already applied");
  validate();
  switch (kind) {
    case Normalization::none: return;
    case Normalization::per_image:
      for (auto& x : items) {
        auto& v = x.values();
        v.array() -= v.mean();
        const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
        if (sd > 0) v /= sd;
      }
      break;
    case Normalization::global01: {
      double lo = 0, scale = 1;
      if (full_scale) {
        if (!(*full_scale > 0)) throw std::invalid_argument("full scale must be positive");
        scale = 1.0 / *full_scale;
      } else {
        lo = items.front().values().minCoeff();
        double hi = items.front().values().maxCoeff();
        for (const auto& x : items) {
          lo = std::min(lo, x.values().minCoeff());
          hi = std::max(hi, x.values().maxCoeff());
        }
        scale = hi > lo ? 1.0 / (hi - lo) : 0.0;
      }
      for (auto& x : items) x.values() = ((x.values().array() - lo) * scale).matrix();
      break;
    }
  }
  normalization = kind;
}

namespace {

void skip_space_and_comments(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

long read_header_int(std::istream& in, const fs::path& path) {
  skip_space_and_comments(in);
  long v = -1;
  if (!(in >> v) || v <= 0) throw std::runtime_error("malformed PGM header in " + path.string());
  return v;
}

}  // namespace

GrayImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') throw std::runtime_error(path.string() + " is not a binary PGM");
  GrayImage img;
  img.width = read_header_int(in, path);
  img.height = read_header_int(in, path);
  img.max_value = static_cast<int>(read_header_int(in, path));
  if (img.max_value > 65535) throw std::runtime_error("PGM maxval out of range in " + path.string());
  in.get();  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(img.width * img.height);
  img.pixels.resize(n);
  if (img.max_value < 256) {
    std::vector<unsigned char> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("truncated PGM raster in " + path.string());
    std::copy(raw.begin(), raw.end(), img.pixels.begin());
  } else {
    std::vector<unsigned char> raw(2 * n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(2 * n));
    if (!in) throw std::runtime_error("truncated PGM raster in " + path.string());
    for (std::size_t i = 0; i < n; ++i) img.pixels[i] = raw[2 * i] * 256.0 + raw[2 * i + 1];
  }
  return img;
}

void write_pgm(const fs::path& path, const GrayImage& image) {
  std::ostringstream os;
  os << "P5\n" << image.width << ' ' << image.height << '\n' << image.max_value << '\n';
  for (double p : image.pixels) {
    const long v = std::clamp<long>(std::lround(p), 0, image.max_value);
    if (image.max_value < 256) {
      os.put(static_cast<char>(v));
    } else {
      os.put(static_cast<char>(v >> 8));
      os.put(static_cast<char>(v & 0xff));
    }
  }
  write_file_atomic(path, os.str());
}

Signal crop_and_resize(const GrayImage& image, Index rows, Index cols) {
  if (rows <= 0 || cols <= 0) throw ShapeError("target shape must be positive");
  const double aspect = static_cast<double>(cols) / static_cast<double>(rows);
  Index cw = image.width, ch = image.height;
  if (static_cast<double>(image.width) > aspect * static_cast<double>(image.height))
    cw = static_cast<Index>(std::lround(aspect * static_cast<double>(image.height)));
  else
    ch = static_cast<Index>(std::lround(static_cast<double>(image.width) / aspect));
  if (cw < cols || ch < rows)
    throw ShapeError("image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                     " is too small for target " + std::to_string(rows) + "x" + std::to_string(cols));
  const Index x0 = (image.width - cw) / 2, y0 = (image.height - ch) / 2;
  auto px = [&](Index r, Index c) { return image.pixels[static_cast<std::size_t>((y0 + r) * image.width + x0 + c)]; };
  auto coord = [](Index dst, Index src_len, Index dst_len, Index& i0, Index& i1, double& w) {
    double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(src_len) / static_cast<double>(dst_len) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src_len - 1));
    i0 = static_cast<Index>(std::floor(s));
    i1 = std::min(i0 + 1, src_len - 1);
    w = s - static_cast<double>(i0);
  };
  Signal out(Shape{rows, cols});
  for (Index r = 0; r < rows; ++r) {
    Index r0, r1;
    double wr;
    coord(r, ch, rows, r0, r1, wr);
    for (Index c = 0; c < cols; ++c) {
      Index c0, c1;
      double wc;
      coord(c, cw, cols, c0, c1, wc);
      const double top = (1 - wc) * px(r0, c0) + wc * px(r0, c1);
      const double bottom = (1 - wc) * px(r1, c0) + wc * px(r1, c1);
      out(r, c) = (1 - wr) * top + wr * bottom;
    }
  }
  return out;
}

Dataset load_images(const fs::path& dir, const Shape& shape, Normalization normalization) {
  if (shape.size() != 2) throw ShapeError("image datasets need a rank-2 shape");
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm") files.push_back(entry.path());
  }
  if (files.empty()) throw std::runtime_error("no PGM images in " + dir.string());
  std::sort(files.begin(), files.end());
  Dataset data;
  data.source = "pgm:" + dir.string();
  int max_value = 0;
  for (const auto& f : files) {
    const GrayImage img = read_pgm(f);
    max_value = std::max(max_value, img.max_value);
    data.items.push_back(crop_and_resize(img, shape[0], shape[1]));
  }
  data.normalize(normalization, static_cast<double>(max_value));
  return data;
}

Dataset synth_texture(const std::string& kind, const Shape& shape, std::uint64_t seed, std::size_t count) {
  check_shape(shape);
  if (count == 0) throw std::invalid_argument("synth_texture needs count >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Dataset data;
  data.source = "synth:" + kind;
  const Index rows = shape.size() == 2 ? shape[0] : 1;
  const Index cols = shape.back();
  for (std::size_t n = 0; n < count; ++n) {
    Signal x(shape);
    if (kind == "stripes") {
      const double angle = std::numbers::pi / 4 + 0.05 * normal(rng);
      const double period = 5.0 + 0.25 * normal(rng);
      const double phase = 2 * std::numbers::pi * uniform(rng);
      for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) {
          const double u = static_cast<double>(c) * std::cos(angle) + static_cast<double>(r) * std::sin(angle);
          x[r * cols + c] = std::sin(2 * std::numbers::pi * u / period + phase) + 0.1 * normal(rng);
        }
    } else if (kind == "checker") {
      const Index cell = 4;
      const auto dr = static_cast<Index>(uniform(rng) * cell), dc = static_cast<Index>(uniform(rng) * cell);
      for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
          x[r * cols + c] = (((r + dr) / cell + (c + dc) / cell) % 2 ? 1.0 : -1.0) + 0.1 * normal(rng);
    } else if (kind == "noise") {
      Signal white(shape);
      for (Index i = 0; i < white.size(); ++i) white[i] = normal(rng);
      // 3x3 (or 3-tap) box blur with zero padding.
      for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) {
          double acc = 0;
          for (Index i = -1; i <= 1; ++i)
            for (Index j = -1; j <= 1; ++j) {
              const Index rr = r + i, cc = c + j;
              if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
              acc += white[rr * cols + cc];
            }
          x[r * cols + c] = acc / 3.0;
        }
    } else {
      throw std::invalid_argument("unknown texture kind '" + kind + "' (stripes, checker, noise)");
    }
    data.items.push_back(std::move(x));
  }
  return data;
}

Dataset gaussian_mixture(Index dim, const std::vector<MixtureComponent>& components, std::uint64_t seed,
                         std::size_t count) {
  if (dim < 1) throw ShapeError("mixture dimension must be >= 1");
  if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
  std::vector<double> weights;
  for (const auto& c : components) {
    if (!(c.weight > 0) || !(c.std_dev >= 0)) throw std::invalid_argument("mixture weights > 0 and std >= 0 required");
    weights.push_back(c.weight);
  }
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal;
  Dataset data;
  data.source = "mixture";
  for (std::size_t n = 0; n < count; ++n) {
    const auto& comp = components[pick(rng)];
    Signal x(Shape{dim});
    for (Index i = 0; i < dim; ++i) x[i] = comp.mean + comp.std_dev * normal(rng);
    data.items.push_back(std::move(x));
  }
  return data;
}

GridMapping export_sample_grid(const std::vector<Signal>& batch, const fs::path& path, std::size_t columns) {
  if (batch.empty()) throw std::invalid_argument("sample grid needs at least one signal");
  const Index h = batch.front().rows(), w = batch.front().cols();
  for (const auto& x : batch)
    if (x.rows() != h || x.cols() != w) throw ShapeError("sample grid needs uniform shapes");
  if (columns == 0) columns = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(batch.size()))));
  const std::size_t grid_rows = (batch.size() + columns - 1) / columns;
  GridMapping map;
  // Range over finite entries; non-finite entries render black.
  map.lo = std::numeric_limits<double>::infinity();
  map.hi = -map.lo;
  for (const auto& x : batch)
    for (Index i = 0; i < x.size(); ++i)
      if (std::isfinite(x[i])) {
        map.lo = std::min(map.lo, x[i]);
        map.hi = std::max(map.hi, x[i]);
      }
  if (map.lo > map.hi) map.lo = map.hi = 0;
  map.scale = map.hi > map.lo ? 255.0 / (map.hi - map.lo) : 0.0;
  GrayImage img;
  img.width = static_cast<Index>(columns) * (w + 1) - 1;
  img.height = static_cast<Index>(grid_rows) * (h + 1) - 1;
  img.pixels.assign(static_cast<std::size_t>(img.width * img.height), 255.0);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const Index top = static_cast<Index>(n / columns) * (h + 1);
    const Index left = static_cast<Index>(n % columns) * (w + 1);
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c) {
        const double x = batch[n](r, c);
        const double v = !std::isfinite(x) ? 0.0 : map.scale > 0 ? (x - map.lo) * map.scale : 127.0;
        img.pixels[static_cast<std::size_t>((top + r) * img.width + left + c)] = std::clamp(v, 0.0, 255.0);
      }
  }
  write_pgm(path, img);
  std::ostringstream side;
  side.precision(17);
  side << "# pixel = (value - lo) * scale, clamped to [0, 255]\n"
       << "lo " << map.lo << "\nhi " << map.hi << "\nscale " << map.scale << '\n';
  write_file_atomic(path.string() + ".map.txt", side.str());
  return map;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace frameflow
