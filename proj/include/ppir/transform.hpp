#pragma once

#include <variant>
#include <vector>

#include "ppir/image.hpp"

namespace ppir::tf {

// Parameter layout is one block per output axis: [A_row_i..., t_i], i.e.
// 2D theta = [a00, a01, tx, a10, a11, ty]. This ordering is what the
// steepest-descent matrix layout relies on.
struct AffineParams {
  int dim = 2;
  std::vector<double> theta;  // length dim*(dim+1)

  static AffineParams identity(int dim);
};

// Cubic B-spline free-form deformation on a padded uniform control grid.
// Control point g (0-based array index) of axis a sits at voxel coordinate
// (g - 1) * control_spacing[a]; +3 padding keeps full cubic support over
// the whole image domain. Coefficients are displacements in voxels, stored
// axis-major: coeffs[axis * num_points + point].
struct BSplineGrid {
  int dim = 2;
  std::vector<double> control_spacing;  // voxels between control points
  std::vector<int> grid_dims;           // control-point counts per axis
  std::vector<double> coeffs;           // num_points * dim displacements

  std::size_t num_points() const;
  std::size_t param_count() const { return coeffs.size(); }

  static BSplineGrid zero(const std::vector<int>& image_dims,
                          const std::vector<double>& spacing_vox);
};

using Transform = std::variant<AffineParams, BSplineGrid>;

// Centered uniform cubic B-spline basis, support (-2, 2).
double bspline3(double t);
// Centered quadratic basis, support (-1.5, 1.5).
double bspline2(double t);

int theta_size(const Transform& t);
std::vector<double> get_theta(const Transform& t);
void set_theta(Transform& t, const std::vector<double>& theta);
void add_theta(Transform& t, const std::vector<double>& delta);

// W_theta(x): affine A*x + t, B-spline x + tensor-product displacement.
void apply_transform(const Transform& t, const double* x, double* out);

// Row of the steepest-descent matrix: grad_I (evaluated at W(x)) contracted
// against dW/dtheta. Writes theta_size entries into `row`.
void transform_jacobian(const Transform& t, const double* x,
                        const double* grad_I, double* row);

// W(x) - x at every voxel center of `dims`; vectors stored per voxel
// contiguously (d components).
std::vector<double> displacement_field(const Transform& t,
                                       const std::vector<int>& dims);

// Parameter transfer between pyramid levels: translations (affine) and
// displacement coefficients (B-spline) scale by ratio = m_old / m_new;
// the B-spline grid is rebuilt for the new dims with nearest control-point
// copy of the old coefficients.
Transform rescale_transform(const Transform& t, double ratio,
                            const std::vector<int>& new_dims);

}  // namespace ppir::tf
