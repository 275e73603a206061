#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace ppir::img {

// d-dimensional scalar intensity grid, d in {2,3}. Data is row-major with
// axis 0 fastest: index = x + dims[0]*(y + dims[1]*z). Intensities are kept
// as 64-bit reals regardless of file depth. Immutable after construction by
// convention; all operations below are pure functions.
struct Image {
  std::vector<int> dims;         // per-axis voxel counts
  std::vector<double> spacing;   // per-axis physical size (mm/voxel)
  std::vector<double> data;
  double vmin = 0.0;             // cached intensity range
  double vmax = 0.0;

  int ndim() const { return (int)dims.size(); }
  std::size_t size() const;
  std::size_t index(int x, int y, int z = 0) const {
    return (std::size_t)x +
           (std::size_t)dims[0] *
               ((std::size_t)y + (ndim() > 2 ? (std::size_t)dims[1] * z : 0));
  }
  double at(int x, int y, int z = 0) const { return data[index(x, y, z)]; }
  void refresh_range();
};

struct PyramidLevel {
  Image image;
  int scale_factor = 1;    // downsampling factor m relative to the original
  double blur_sigma = 0.0; // 0 means no smoothing applied
};

Image make_image(std::vector<int> dims, std::vector<double> spacing,
                 std::vector<double> data);

// File formats: PGM (P5, maxval <= 65535) for 2D; raw little-endian f32 +
// text sidecar (dims=..., spacing=...) for volumes.
Image load_image(const std::string& path);
void save_pgm(const Image& img, const std::string& path, int maxval = 255);
void save_raw(const Image& img, const std::string& path);

Image downsample(const Image& img, int m);
Image gaussian_blur(const Image& img, double sigma);
PyramidLevel make_level(const Image& img, int m, double sigma);

// Central differences in the interior, one-sided at borders, 1/spacing
// scaled. One output image per axis.
std::vector<Image> gradient(const Image& img);

// Multilinear interpolation; coordinates outside the domain contribute zero.
double interpolate(const Image& img, const double* x);

// Interpolates a per-axis image set (e.g. gradient images) at one point.
void interpolate_vec(const std::vector<Image>& imgs, const double* x,
                     double* out);

std::vector<double> gaussian_kernel(double sigma);

}  // namespace ppir::img
