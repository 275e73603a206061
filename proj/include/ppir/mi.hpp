#pragma once

#include <vector>

#include "ppir/ssd.hpp"

namespace ppir::mi {

// Histogram configuration. Intensities are mapped to the bin range [1, N-2]
// (bin width uses the N-3 divisor) so the cubic Parzen support never exits
// the histogram.
struct ParzenConfig {
  int bins_r = 32;
  int bins_t = 32;
  double min_r = 0.0;
  double min_t = 0.0;
  double bin_width_r = 1.0;
  double bin_width_t = 1.0;

  double pos_r(double v) const { return (v - min_r) / bin_width_r + 1.0; }
  double pos_t(double v) const { return (v - min_t) / bin_width_t + 1.0; }
};

ParzenConfig make_parzen_config(int bins_r, int bins_t, double min_r,
                                double max_r, double min_t, double max_t);

// Centered uniform B-spline Parzen window of order 0, 2 or 3; order 0 is
// the half-open box [-1/2, 1/2).
double parzen_window(int order, double eps);
// d/deps of the cubic window via the quadratic identity.
double parzen_window3_deriv(double eps);

struct JointPdf {
  int bins_r = 0;
  int bins_t = 0;
  std::vector<double> P;    // bins_r x bins_t row-major
  std::vector<double> p_r;  // row sums
  std::vector<double> p_t;  // column sums

  double at(int r, int t) const { return P[(std::size_t)r * bins_t + t]; }
};

// A: N_x x bins_r cubic window weights; B: N_x x bins_t one-hot rows.
struct HistogramMatrices {
  std::size_t rows = 0;
  int bins_r = 0;
  int bins_t = 0;
  std::vector<double> A;
  std::vector<double> B;
};

HistogramMatrices build_histogram_matrices(const std::vector<double>& warped,
                                           const std::vector<double>& target,
                                           const ParzenConfig& cfg);
std::vector<double> build_matrix_a(const std::vector<double>& warped,
                                   const ParzenConfig& cfg);
std::vector<double> build_matrix_b(const std::vector<double>& target,
                                   const ParzenConfig& cfg);

JointPdf joint_pdf(const std::vector<double>& A, const std::vector<double>& B,
                   std::size_t n_x, int bins_r, int bins_t);
JointPdf joint_pdf_from_raw(std::vector<double> P, int bins_r, int bins_t);

// C[k, r, p] = window3'(eps_{k,r}) * (-1/bin_width_r) * S[k, p], stored as
// bins_r slices of N_x x |theta| (slice(r) is a matrix multiplied against
// B^T independently).
struct DerivativeTensorC {
  std::size_t rows = 0;   // N_x
  int bins_r = 0;
  std::size_t params = 0;
  std::vector<double> data;  // [r][k][p]

  const double* slice(int r) const { return data.data() + (std::size_t)r * rows * params; }
};

DerivativeTensorC build_derivative_tensor(const std::vector<double>& warped,
                                          const ssd::SteepestDescentMatrix& S,
                                          const ParzenConfig& cfg);

// P'[t, r, p] = -(1/N_x) sum_k B[k,t] C[k,r,p], stored as |theta| slices of
// bins_t x bins_r.
struct PdfDerivative {
  int bins_r = 0;
  int bins_t = 0;
  std::size_t params = 0;
  std::vector<double> data;  // [p][t][r]

  double at(int t, int r, std::size_t p) const {
    return data[(p * (std::size_t)bins_t + t) * bins_r + r];
  }
};

PdfDerivative joint_pdf_derivative(const std::vector<double>& B,
                                   const DerivativeTensorC& C,
                                   std::size_t n_x, int bins_t);

constexpr double kPdfFloor = 1e-12;

double mi_value(const JointPdf& P);

struct MiGaussNewtonTerms {
  std::vector<double> G;
  std::vector<double> H;
  double value = 0.0;  // positive MI; the optimizer minimizes its negation
};

MiGaussNewtonTerms mi_gauss_newton_terms(const JointPdf& P,
                                         const PdfDerivative& Pd);

}  // namespace ppir::mi
