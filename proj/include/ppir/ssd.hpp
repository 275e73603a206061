#pragma once

#include <array>
#include <vector>

#include "ppir/image.hpp"
#include "ppir/transform.hpp"

namespace ppir::ssd {

// Steepest-descent matrix: row k is the transform Jacobian at coords[k]
// contracted with the warped image gradient. Row-major N_x x |theta|.
struct SteepestDescentMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  std::vector<std::array<double, 3>> coords;

  const double* row(std::size_t k) const { return data.data() + k * cols; }
};

struct SsdGaussNewtonTerms {
  std::vector<double> G;  // |theta|
  std::vector<double> H;  // |theta| x |theta| row-major
  double value = 0.0;     // summed SSD over the sample set
};

double ssd_value(const std::vector<double>& warped,
                 const std::vector<double>& target);

// Warped intensities I(W(x_k)) for a sample set.
std::vector<double> warp_samples(const img::Image& I, const tf::Transform& t,
                                 const std::vector<std::array<double, 3>>& coords);

// Target intensities J(x_k) at exact voxel coordinates.
std::vector<double> target_samples(const img::Image& J,
                                   const std::vector<std::array<double, 3>>& coords);

SteepestDescentMatrix build_steepest_descent(
    const std::vector<img::Image>& grad_I, const tf::Transform& t,
    const std::vector<std::array<double, 3>>& coords);

// G = S^T*warped - R with R = S^T*target, H = S^T*S. The cleartext
// reference path; R is the only term that mixes both parties' data.
SsdGaussNewtonTerms ssd_terms_clear(const SteepestDescentMatrix& S,
                                    const std::vector<double>& warped,
                                    const std::vector<double>& target);

// Same terms with R supplied externally (by a secure product or any other
// route); G and H are computed locally from S and warped, `value` is left
// at 0 for the caller to fill in.
SsdGaussNewtonTerms ssd_terms_with_r(const SteepestDescentMatrix& S,
                                     const std::vector<double>& warped,
                                     const std::vector<double>& R);

// SSD assembled from sum(w^2), w.t and sum(t^2).
double ssd_from_parts(double warped_sq_sum, double cross_dot,
                      double target_sq_sum);

}  // namespace ppir::ssd
