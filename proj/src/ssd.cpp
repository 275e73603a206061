#include "ppir/ssd.hpp"

#include <cmath>

#include "ppir/errors.hpp"
#include "ppir/kernels.hpp"

namespace ppir::ssd {

double ssd_value(const std::vector<double>& warped,
                 const std::vector<double>& target) {
  if (warped.size() != target.size())
    throw ConfigError("ssd_value: length mismatch");
  double acc = 0.0, comp = 0.0;  // Neumaier summation keeps sums order-stable
  for (std::size_t i = 0; i < warped.size(); ++i) {
    double d = warped[i] - target[i];
    double term = d * d;
    double t = acc + term;
    comp += std::fabs(acc) >= std::fabs(term) ? (acc - t) + term
                                              : (term - t) + acc;
    acc = t;
  }
  return acc + comp;
}

std::vector<double> warp_samples(const img::Image& I, const tf::Transform& t,
                                 const std::vector<std::array<double, 3>>& coords) {
  std::vector<double> out(coords.size());
#pragma omp parallel for schedule(static) if (kernels::parallel_enabled())
  for (long long k = 0; k < (long long)coords.size(); ++k) {
    double w[3];
    tf::apply_transform(t, coords[(std::size_t)k].data(), w);
    out[(std::size_t)k] = img::interpolate(I, w);
  }
  return out;
}

std::vector<double> target_samples(const img::Image& J,
                                   const std::vector<std::array<double, 3>>& coords) {
  std::vector<double> out(coords.size());
  for (std::size_t k = 0; k < coords.size(); ++k) {
    const auto& c = coords[k];
    out[k] = J.at((int)c[0], (int)c[1], J.ndim() > 2 ? (int)c[2] : 0);
  }
  return out;
}

SteepestDescentMatrix build_steepest_descent(
    const std::vector<img::Image>& grad_I, const tf::Transform& t,
    const std::vector<std::array<double, 3>>& coords) {
  if (coords.empty()) throw ConfigError("build_steepest_descent: empty coords");
  SteepestDescentMatrix S;
  S.rows = coords.size();
  S.cols = (std::size_t)tf::theta_size(t);
  S.data.assign(S.rows * S.cols, 0.0);
  S.coords = coords;
#pragma omp parallel for schedule(static) if (kernels::parallel_enabled())
  for (long long k = 0; k < (long long)S.rows; ++k) {
    double w[3];
    tf::apply_transform(t, coords[(std::size_t)k].data(), w);
    double g[3] = {0, 0, 0};
    img::interpolate_vec(grad_I, w, g);
    tf::transform_jacobian(t, coords[(std::size_t)k].data(), g,
                           S.data.data() + (std::size_t)k * S.cols);
  }
  return S;
}

SsdGaussNewtonTerms ssd_terms_with_r(const SteepestDescentMatrix& S,
                                     const std::vector<double>& warped,
                                     const std::vector<double>& R) {
  if (warped.size() != S.rows || R.size() != S.cols)
    throw ConfigError("ssd_terms: dimension mismatch");
  SsdGaussNewtonTerms out;
  out.G.resize(S.cols);
  out.H.resize(S.cols * S.cols);
  kernels::matvec_tn(S.data.data(), warped.data(), out.G.data(), S.rows, S.cols);
  for (std::size_t i = 0; i < S.cols; ++i) out.G[i] -= R[i];
  kernels::matmul_tn(S.data.data(), S.data.data(), out.H.data(), S.rows,
                     S.cols, S.cols);
  return out;
}

SsdGaussNewtonTerms ssd_terms_clear(const SteepestDescentMatrix& S,
                                    const std::vector<double>& warped,
                                    const std::vector<double>& target) {
  if (target.size() != S.rows)
    throw ConfigError("ssd_terms: dimension mismatch");
  std::vector<double> R(S.cols);
  kernels::matvec_tn(S.data.data(), target.data(), R.data(), S.rows, S.cols);
  auto out = ssd_terms_with_r(S, warped, R);
  out.value = ssd_value(warped, target);
  return out;
}

double ssd_from_parts(double warped_sq_sum, double cross_dot,
                      double target_sq_sum) {
  return warped_sq_sum - 2.0 * cross_dot + target_sq_sum;
}

}  // namespace ppir::ssd
