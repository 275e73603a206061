#include "ppir/transform.hpp"

#include <cmath>
#include <cstring>

#include "ppir/errors.hpp"

namespace ppir::tf {

AffineParams AffineParams::identity(int dim) {
  AffineParams p;
  p.dim = dim;
  p.theta.assign((std::size_t)dim * (dim + 1), 0.0);
  for (int i = 0; i < dim; ++i) p.theta[(std::size_t)i * (dim + 1) + i] = 1.0;
  return p;
}

std::size_t BSplineGrid::num_points() const {
  std::size_t n = 1;
  for (int d : grid_dims) n *= (std::size_t)d;
  return n;
}

BSplineGrid BSplineGrid::zero(const std::vector<int>& image_dims,
                              const std::vector<double>& spacing_vox) {
  BSplineGrid g;
  g.dim = (int)image_dims.size();
  g.control_spacing = spacing_vox;
  if ((int)spacing_vox.size() != g.dim)
    throw ConfigError("bspline: control spacing rank mismatch");
  for (double s : spacing_vox)
    if (!(s > 0)) throw ConfigError("bspline: control spacing must be > 0");
  for (int a = 0; a < g.dim; ++a)
    g.grid_dims.push_back(
        (int)std::ceil((double)image_dims[a] / spacing_vox[a]) + 3);
  g.coeffs.assign(g.num_points() * (std::size_t)g.dim, 0.0);
  return g;
}

double bspline3(double t) {
  double a = std::fabs(t);
  if (a >= 2.0) return 0.0;
  if (a < 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
  double b = 2.0 - a;
  return b * b * b / 6.0;
}

double bspline2(double t) {
  double a = std::fabs(t);
  if (a >= 1.5) return 0.0;
  if (a < 0.5) return 0.75 - a * a;
  double b = a - 1.5;
  return 0.5 * b * b;
}

int theta_size(const Transform& t) {
  if (auto* a = std::get_if<AffineParams>(&t))
    return a->dim * (a->dim + 1);
  return (int)std::get<BSplineGrid>(t).param_count();
}

std::vector<double> get_theta(const Transform& t) {
  if (auto* a = std::get_if<AffineParams>(&t)) return a->theta;
  return std::get<BSplineGrid>(t).coeffs;
}

void set_theta(Transform& t, const std::vector<double>& theta) {
  if (auto* a = std::get_if<AffineParams>(&t)) {
    if (theta.size() != a->theta.size())
      throw ConfigError("set_theta: affine size mismatch");
    a->theta = theta;
  } else {
    auto& g = std::get<BSplineGrid>(t);
    if (theta.size() != g.coeffs.size())
      throw ConfigError("set_theta: bspline size mismatch");
    g.coeffs = theta;
  }
}

void add_theta(Transform& t, const std::vector<double>& delta) {
  if (auto* a = std::get_if<AffineParams>(&t)) {
    for (std::size_t i = 0; i < a->theta.size(); ++i) a->theta[i] += delta[i];
  } else {
    auto& g = std::get<BSplineGrid>(t);
    for (std::size_t i = 0; i < g.coeffs.size(); ++i) g.coeffs[i] += delta[i];
  }
}

namespace {

// Collects the <=4 supported control indices per axis and their weights.
struct AxisSupport {
  int idx[4];     // clamped array indices
  double w[4];
  int count;
};

AxisSupport axis_support(double x, double spacing, int grid_dim) {
  AxisSupport s;
  s.count = 0;
  const double u = x / spacing;
  const int g0 = (int)std::ceil(u - 2.0);
  for (int g = g0; g < g0 + 5 && s.count < 4; ++g) {
    double w = bspline3(u - (double)g);
    if (w == 0.0) continue;
    int ai = g + 1;  // grid index -> array index (one pad point below zero)
    if (ai < 0) ai = 0;
    if (ai >= grid_dim) ai = grid_dim - 1;
    s.idx[s.count] = ai;
    s.w[s.count] = w;
    ++s.count;
  }
  return s;
}

}  // namespace

void apply_transform(const Transform& t, const double* x, double* out) {
  if (auto* a = std::get_if<AffineParams>(&t)) {
    const int d = a->dim;
    for (int i = 0; i < d; ++i) {
      double acc = a->theta[(std::size_t)i * (d + 1) + d];  // translation
      for (int j = 0; j < d; ++j)
        acc += a->theta[(std::size_t)i * (d + 1) + j] * x[j];
      out[i] = acc;
    }
    return;
  }
  const auto& g = std::get<BSplineGrid>(t);
  const int d = g.dim;
  AxisSupport sup[3];
  for (int a = 0; a < d; ++a)
    sup[a] = axis_support(x[a], g.control_spacing[a], g.grid_dims[a]);
  const std::size_t npts = g.num_points();
  double disp[3] = {0, 0, 0};
  int counts[3] = {sup[0].count, d > 1 ? sup[1].count : 1,
                   d > 2 ? sup[2].count : 1};
  for (int c2 = 0; c2 < counts[2]; ++c2)
    for (int c1 = 0; c1 < counts[1]; ++c1)
      for (int c0 = 0; c0 < counts[0]; ++c0) {
        double w = sup[0].w[c0] * (d > 1 ? sup[1].w[c1] : 1.0) *
                   (d > 2 ? sup[2].w[c2] : 1.0);
        std::size_t pt =
            (std::size_t)sup[0].idx[c0] +
            (std::size_t)g.grid_dims[0] *
                ((d > 1 ? (std::size_t)sup[1].idx[c1] : 0) +
                 (d > 2 ? (std::size_t)g.grid_dims[1] * sup[2].idx[c2] : 0));
        for (int a = 0; a < d; ++a)
          disp[a] += w * g.coeffs[(std::size_t)a * npts + pt];
      }
  for (int a = 0; a < d; ++a) out[a] = x[a] + disp[a];
}

void transform_jacobian(const Transform& t, const double* x,
                        const double* grad_I, double* row) {
  if (auto* a = std::get_if<AffineParams>(&t)) {
    const int d = a->dim;
    // dW_i/d(a_ij) = x_j, dW_i/d(t_i) = 1, so the row for output axis i is
    // grad_I[i] * [x_0 .. x_{d-1}, 1].
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) row[i * (d + 1) + j] = grad_I[i] * x[j];
      row[i * (d + 1) + d] = grad_I[i];
    }
    return;
  }
  const auto& g = std::get<BSplineGrid>(t);
  const int d = g.dim;
  std::memset(row, 0, g.param_count() * sizeof(double));
  AxisSupport sup[3];
  for (int a = 0; a < d; ++a)
    sup[a] = axis_support(x[a], g.control_spacing[a], g.grid_dims[a]);
  const std::size_t npts = g.num_points();
  int counts[3] = {sup[0].count, d > 1 ? sup[1].count : 1,
                   d > 2 ? sup[2].count : 1};
  for (int c2 = 0; c2 < counts[2]; ++c2)
    for (int c1 = 0; c1 < counts[1]; ++c1)
      for (int c0 = 0; c0 < counts[0]; ++c0) {
        double w = sup[0].w[c0] * (d > 1 ? sup[1].w[c1] : 1.0) *
                   (d > 2 ? sup[2].w[c2] : 1.0);
        std::size_t pt =
            (std::size_t)sup[0].idx[c0] +
            (std::size_t)g.grid_dims[0] *
                ((d > 1 ? (std::size_t)sup[1].idx[c1] : 0) +
                 (d > 2 ? (std::size_t)g.grid_dims[1] * sup[2].idx[c2] : 0));
        for (int a = 0; a < d; ++a)
          row[(std::size_t)a * npts + pt] += w * grad_I[a];
      }
}

std::vector<double> displacement_field(const Transform& t,
                                       const std::vector<int>& dims) {
  const int d = (int)dims.size();
  std::size_t n = 1;
  for (int e : dims) n *= (std::size_t)e;
  std::vector<double> field(n * (std::size_t)d);
  const int nz = d > 2 ? dims[2] : 1;
  std::size_t i = 0;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        double in[3] = {(double)x, (double)y, (double)z};
        double out[3];
        apply_transform(t, in, out);
        for (int a = 0; a < d; ++a) field[i * d + a] = out[a] - in[a];
        ++i;
      }
  return field;
}

Transform rescale_transform(const Transform& t, double ratio,
                            const std::vector<int>& new_dims) {
  if (auto* a = std::get_if<AffineParams>(&t)) {
    AffineParams out = *a;
    for (int i = 0; i < a->dim; ++i)
      out.theta[(std::size_t)i * (a->dim + 1) + a->dim] *= ratio;
    return out;
  }
  const auto& g = std::get<BSplineGrid>(t);
  BSplineGrid out = BSplineGrid::zero(new_dims, g.control_spacing);
  const std::size_t onpts = out.num_points();
  const std::size_t inpts = g.num_points();
  const int d = g.dim;
  const int nz = d > 2 ? out.grid_dims[2] : 1;
  std::size_t pt = 0;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < out.grid_dims[1]; ++y)
      for (int x = 0; x < out.grid_dims[0]; ++x, ++pt) {
        // nearest old control point in old-level voxel coordinates
        int oi[3] = {0, 0, 0};
        int ni[3] = {x, y, z};
        for (int a = 0; a < d; ++a) {
          double pos_new = (ni[a] - 1) * out.control_spacing[a];  // new voxels
          double pos_old = pos_new / ratio;
          int gi = (int)std::lround(pos_old / g.control_spacing[a]) + 1;
          if (gi < 0) gi = 0;
          if (gi >= g.grid_dims[a]) gi = g.grid_dims[a] - 1;
          oi[a] = gi;
        }
        std::size_t opt =
            (std::size_t)oi[0] +
            (std::size_t)g.grid_dims[0] *
                ((d > 1 ? (std::size_t)oi[1] : 0) +
                 (d > 2 ? (std::size_t)g.grid_dims[1] * oi[2] : 0));
        for (int a = 0; a < d; ++a)
          out.coeffs[(std::size_t)a * onpts + pt] =
              ratio * g.coeffs[(std::size_t)a * inpts + opt];
      }
  return out;
}

}  // namespace ppir::tf
