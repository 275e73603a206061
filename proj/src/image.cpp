#include "ppir/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "ppir/errors.hpp"
#include "ppir/kernels.hpp"

namespace ppir::img {

std::size_t Image::size() const {
  std::size_t n = 1;
  for (int d : dims) n *= (std::size_t)d;
  return n;
}

void Image::refresh_range() {
  if (data.empty()) {
    vmin = vmax = 0.0;
    return;
  }
  auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  vmin = *lo;
  vmax = *hi;
}

Image make_image(std::vector<int> dims, std::vector<double> spacing,
                 std::vector<double> data) {
  if (dims.size() < 2 || dims.size() > 3)
    throw ConfigError("image rank must be 2 or 3, got " +
                      std::to_string(dims.size()));
  std::size_t n = 1;
  for (int d : dims) {
    if (d < 1) throw ConfigError("image dim must be >= 1");
    n *= (std::size_t)d;
  }
  if (spacing.size() != dims.size())
    throw ConfigError("spacing rank mismatch");
  for (double s : spacing)
    if (!(s > 0)) throw ConfigError("spacing must be > 0");
  if (data.size() != n)
    throw ConfigError("data length " + std::to_string(data.size()) +
                      " does not match dims product " + std::to_string(n));
  Image out;
  out.dims = std::move(dims);
  out.spacing = std::move(spacing);
  out.data = std::move(data);
  out.refresh_range();
  return out;
}

// ---------------------------------------------------------------- file I/O

namespace {

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back((char)c);
  }
  return tok;
}

long parse_int_field(const std::string& tok, const char* field) {
  if (tok.empty()) throw ConfigError(std::string("pgm: missing ") + field);
  char* end = nullptr;
  long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0')
    throw ConfigError(std::string("pgm: malformed ") + field + " '" + tok + "'");
  if (v <= 0)
    throw ConfigError(std::string("pgm: non-positive ") + field + " '" + tok +
                      "'");
  return v;
}

Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::string magic = pgm_token(in);
  if (magic != "P5") throw ConfigError("pgm: bad magic '" + magic + "'");
  long w = parse_int_field(pgm_token(in), "width");
  long h = parse_int_field(pgm_token(in), "height");
  long maxval = parse_int_field(pgm_token(in), "maxval");
  if (maxval > 65535) throw ConfigError("pgm: maxval > 65535");
  // single whitespace byte after maxval already consumed by tokenizer
  const std::size_t n = (std::size_t)w * (std::size_t)h;
  std::vector<double> data(n);
  if (maxval < 256) {
    std::vector<std::uint8_t> buf(n);
    in.read((char*)buf.data(), (std::streamsize)n);
    if ((std::size_t)in.gcount() != n)
      throw ConfigError("pgm: data length does not match header dims");
    for (std::size_t i = 0; i < n; ++i) data[i] = (double)buf[i];
  } else {
    std::vector<std::uint8_t> buf(2 * n);
    in.read((char*)buf.data(), (std::streamsize)(2 * n));
    if ((std::size_t)in.gcount() != 2 * n)
      throw ConfigError("pgm: data length does not match header dims");
    for (std::size_t i = 0; i < n; ++i)
      data[i] = (double)((buf[2 * i] << 8) | buf[2 * i + 1]);  // MSB first
  }
  return make_image({(int)w, (int)h}, {1.0, 1.0}, std::move(data));
}

std::vector<double> parse_csv_doubles(const std::string& s, const char* key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      double v = std::stod(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("meta: malformed ") + key + " entry '" +
                        item + "'");
    }
  }
  return out;
}

std::string sidecar_path(const std::string& raw_path) {
  auto dot = raw_path.rfind('.');
  std::string stem = dot == std::string::npos ? raw_path : raw_path.substr(0, dot);
  return stem + ".meta";
}

Image load_raw(const std::string& path) {
  std::ifstream meta(sidecar_path(path));
  if (!meta) throw ConfigError("cannot open sidecar " + sidecar_path(path));
  std::vector<int> dims;
  std::vector<double> spacing;
  std::string line;
  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("meta: malformed line '" + line + "'");
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "dims") {
      for (double v : parse_csv_doubles(val, "dims")) {
        if (v < 1 || v != std::floor(v))
          throw ConfigError("meta: bad dims value");
        dims.push_back((int)v);
      }
    } else if (key == "spacing") {
      spacing = parse_csv_doubles(val, "spacing");
    } else {
      throw ConfigError("meta: unknown key '" + key + "'");
    }
  }
  if (dims.empty()) throw ConfigError("meta: missing dims");
  if (spacing.empty()) spacing.assign(dims.size(), 1.0);
  std::size_t n = 1;
  for (int d : dims) n *= (std::size_t)d;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<float> buf(n);
  in.read((char*)buf.data(), (std::streamsize)(n * sizeof(float)));
  if ((std::size_t)in.gcount() != n * sizeof(float))
    throw ConfigError("raw: data length does not match sidecar dims");
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = (double)buf[i];
  return make_image(std::move(dims), std::move(spacing), std::move(data));
}

}  // namespace

Image load_image(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".pgm") == 0)
    return load_pgm(path);
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".raw") == 0)
    return load_raw(path);
  throw ConfigError("unknown image format: " + path);
}

void save_pgm(const Image& img, const std::string& path, int maxval) {
  if (img.ndim() != 2) throw ConfigError("pgm supports 2D only");
  if (maxval < 1 || maxval > 65535) throw ConfigError("pgm: bad maxval");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << "P5\n" << img.dims[0] << " " << img.dims[1] << "\n" << maxval << "\n";
  const std::size_t n = img.size();
  auto q = [&](double v) {
    long r = std::lround(v);
    return std::clamp(r, 0l, (long)maxval);
  };
  if (maxval < 256) {
    std::vector<std::uint8_t> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = (std::uint8_t)q(img.data[i]);
    out.write((const char*)buf.data(), (std::streamsize)n);
  } else {
    std::vector<std::uint8_t> buf(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      long v = q(img.data[i]);
      buf[2 * i] = (std::uint8_t)(v >> 8);
      buf[2 * i + 1] = (std::uint8_t)(v & 0xFF);
    }
    out.write((const char*)buf.data(), (std::streamsize)(2 * n));
  }
}

void save_raw(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  std::vector<float> buf(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) buf[i] = (float)img.data[i];
  out.write((const char*)buf.data(),
            (std::streamsize)(buf.size() * sizeof(float)));
  std::ofstream meta(sidecar_path(path));
  if (!meta) throw ConfigError("cannot write " + sidecar_path(path));
  meta << "dims=";
  for (std::size_t i = 0; i < img.dims.size(); ++i)
    meta << (i ? "," : "") << img.dims[i];
  meta << "\nspacing=";
  for (std::size_t i = 0; i < img.spacing.size(); ++i)
    meta << (i ? "," : "") << img.spacing[i];
  meta << "\n";
}

// ---------------------------------------------------------------- resample

Image downsample(const Image& img, int m) {
  if (m < 1) throw ConfigError("downsample: factor must be >= 1");
  if (m == 1) return img;
  const int nd = img.ndim();
  std::vector<int> od(nd);
  for (int a = 0; a < nd; ++a) od[a] = (img.dims[a] + m - 1) / m;
  std::vector<double> sp(nd);
  for (int a = 0; a < nd; ++a) sp[a] = img.spacing[a] * m;
  std::size_t on = 1;
  for (int d : od) on *= (std::size_t)d;
  std::vector<double> out(on);
  const int d2 = nd > 2 ? od[2] : 1;
  const long long planes = (long long)od[1] * d2;
#pragma omp parallel for schedule(static) if (kernels::parallel_enabled())
  for (long long p = 0; p < planes; ++p) {
    const int oy = (int)(p % od[1]);
    const int oz = (int)(p / od[1]);
    for (int ox = 0; ox < od[0]; ++ox) {
      double acc = 0.0;
      int cnt = 0;
      const int zlo = nd > 2 ? oz * m : 0;
      const int zhi = nd > 2 ? std::min(zlo + m, img.dims[2]) : 1;
      for (int z = zlo; z < zhi; ++z)
        for (int y = oy * m; y < std::min((oy + 1) * m, img.dims[1]); ++y)
          for (int x = ox * m; x < std::min((ox + 1) * m, img.dims[0]); ++x) {
            acc += img.at(x, y, z);
            ++cnt;
          }
      std::size_t oi =
          (std::size_t)ox +
          (std::size_t)od[0] *
              ((std::size_t)oy + (nd > 2 ? (std::size_t)od[1] * oz : 0));
      out[oi] = acc / cnt;
    }
  }
  return make_image(od, sp, std::move(out));
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = (int)std::ceil(3.0 * sigma);
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma < 0) throw ConfigError("blur: sigma must be >= 0");
  if (sigma == 0.0) return img;
  const auto k = gaussian_kernel(sigma);
  const int radius = ((int)k.size() - 1) / 2;
  std::size_t dims[3] = {(std::size_t)img.dims[0], (std::size_t)img.dims[1],
                         img.ndim() > 2 ? (std::size_t)img.dims[2] : 1};
  std::vector<double> a = img.data, b(img.size());
  const double* src = a.data();
  double* dst = b.data();
  for (int axis = 0; axis < img.ndim(); ++axis) {
    kernels::conv_axis(src, dst, dims, img.ndim(), axis, k.data(), radius);
    std::swap(src, dst);
  }
  std::vector<double> out(src == a.data() ? std::move(a) : std::move(b));
  return make_image(img.dims, img.spacing, std::move(out));
}

PyramidLevel make_level(const Image& img, int m, double sigma) {
  PyramidLevel lvl;
  lvl.image = gaussian_blur(downsample(img, m), sigma);
  lvl.scale_factor = m;
  lvl.blur_sigma = sigma;
  return lvl;
}

// ---------------------------------------------------------------- gradient

std::vector<Image> gradient(const Image& img) {
  const int nd = img.ndim();
  for (int a = 0; a < nd; ++a)
    if (img.dims[a] < 2)
      throw ConfigError("gradient: axis extent must be >= 2");
  std::vector<Image> out;
  const int nz = nd > 2 ? img.dims[2] : 1;
  for (int axis = 0; axis < nd; ++axis) {
    std::vector<double> g(img.size());
    const double inv = 1.0 / img.spacing[axis];
    const int extent = img.dims[axis];
#pragma omp parallel for schedule(static) if (kernels::parallel_enabled())
    for (int z = 0; z < nz; ++z) {
      for (int y = 0; y < img.dims[1]; ++y)
        for (int x = 0; x < img.dims[0]; ++x) {
          int c[3] = {x, y, z};
          int lo[3] = {x, y, z}, hi[3] = {x, y, z};
          double scale;
          if (c[axis] == 0) {
            hi[axis] = 1;
            scale = inv;
          } else if (c[axis] == extent - 1) {
            lo[axis] = extent - 2;
            scale = inv;
          } else {
            lo[axis] -= 1;
            hi[axis] += 1;
            scale = 0.5 * inv;
          }
          g[img.index(x, y, z)] =
              (img.at(hi[0], hi[1], hi[2]) - img.at(lo[0], lo[1], lo[2])) *
              scale;
        }
    }
    out.push_back(make_image(img.dims, img.spacing, std::move(g)));
  }
  return out;
}

// ------------------------------------------------------------- interpolate

double interpolate(const Image& img, const double* x) {
  const int nd = img.ndim();
  int base[3] = {0, 0, 0};
  double frac[3] = {0, 0, 0};
  for (int a = 0; a < nd; ++a) {
    if (std::isnan(x[a])) throw NumericError("interpolate: NaN coordinate");
    if (x[a] <= -1.0 || x[a] >= (double)img.dims[a]) return 0.0;
    double fl = std::floor(x[a]);
    base[a] = (int)fl;
    frac[a] = x[a] - fl;
  }
  const int corners = 1 << nd;
  double acc = 0.0;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    int idx[3] = {0, 0, 0};
    bool inside = true;
    for (int a = 0; a < nd; ++a) {
      int bit = (c >> a) & 1;
      w *= bit ? frac[a] : 1.0 - frac[a];
      idx[a] = base[a] + bit;
      if (idx[a] < 0 || idx[a] >= img.dims[a]) inside = false;
    }
    if (inside && w != 0.0) acc += w * img.data[img.index(idx[0], idx[1], idx[2])];
  }
  return acc;
}

void interpolate_vec(const std::vector<Image>& imgs, const double* x,
                     double* out) {
  for (std::size_t i = 0; i < imgs.size(); ++i) out[i] = interpolate(imgs[i], x);
}

}  // namespace ppir::img
