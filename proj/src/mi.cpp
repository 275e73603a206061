#include "ppir/mi.hpp"

#include <cmath>
#include <cstring>

#include "ppir/errors.hpp"
#include "ppir/kernels.hpp"
#include "ppir/transform.hpp"

namespace ppir::mi {

ParzenConfig make_parzen_config(int bins_r, int bins_t, double min_r,
                                double max_r, double min_t, double max_t) {
  if (bins_r < 4 || bins_t < 4)
    throw ConfigError("parzen: need at least 4 bins");
  ParzenConfig cfg;
  cfg.bins_r = bins_r;
  cfg.bins_t = bins_t;
  cfg.min_r = min_r;
  cfg.min_t = min_t;
  cfg.bin_width_r = std::max(max_r - min_r, 1e-9) / (bins_r - 3);
  cfg.bin_width_t = std::max(max_t - min_t, 1e-9) / (bins_t - 3);
  return cfg;
}

double parzen_window(int order, double eps) {
  switch (order) {
    case 0:
      return (eps >= -0.5 && eps < 0.5) ? 1.0 : 0.0;
    case 2:
      return tf::bspline2(eps);
    case 3:
      return tf::bspline3(eps);
    default:
      throw ConfigError("parzen_window: order must be 0, 2 or 3");
  }
}

double parzen_window3_deriv(double eps) {
  return tf::bspline2(eps + 0.5) - tf::bspline2(eps - 0.5);
}

std::vector<double> build_matrix_a(const std::vector<double>& warped,
                                   const ParzenConfig& cfg) {
  if (!(cfg.bin_width_r > 0)) throw ConfigError("parzen: zero-width r bins");
  const std::size_t n = warped.size();
  std::vector<double> A(n * (std::size_t)cfg.bins_r, 0.0);
#pragma omp parallel for schedule(static) if (kernels::parallel_enabled())
  for (long long k = 0; k < (long long)n; ++k) {
    const double v = cfg.pos_r(warped[(std::size_t)k]);
    int lo = std::max(0, (int)std::ceil(v - 2.0));
    int hi = std::min(cfg.bins_r - 1, (int)std::floor(v + 2.0));
    double* row = A.data() + (std::size_t)k * cfg.bins_r;
    for (int r = lo; r <= hi; ++r) row[r] = tf::bspline3((double)r - v);
  }
  return A;
}

std::vector<double> build_matrix_b(const std::vector<double>& target,
                                   const ParzenConfig& cfg) {
  if (!(cfg.bin_width_t > 0)) throw ConfigError("parzen: zero-width t bins");
  const std::size_t n = target.size();
  std::vector<double> B(n * (std::size_t)cfg.bins_t, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = cfg.pos_t(target[k]);
    // half-open box [-1/2, 1/2): the unique t with -0.5 <= t - v < 0.5
    int t = (int)std::ceil(v - 0.5);
    if (t < 0) t = 0;
    if (t >= cfg.bins_t) t = cfg.bins_t - 1;
    B[k * (std::size_t)cfg.bins_t + t] = 1.0;
  }
  return B;
}

HistogramMatrices build_histogram_matrices(const std::vector<double>& warped,
                                           const std::vector<double>& target,
                                           const ParzenConfig& cfg) {
  if (warped.size() != target.size())
    throw ConfigError("histogram: sample length mismatch");
  HistogramMatrices out;
  out.rows = warped.size();
  out.bins_r = cfg.bins_r;
  out.bins_t = cfg.bins_t;
  out.A = build_matrix_a(warped, cfg);
  out.B = build_matrix_b(target, cfg);
  return out;
}

JointPdf joint_pdf_from_raw(std::vector<double> P, int bins_r, int bins_t) {
  JointPdf out;
  out.bins_r = bins_r;
  out.bins_t = bins_t;
  out.P = std::move(P);
  out.p_r.assign(bins_r, 0.0);
  out.p_t.assign(bins_t, 0.0);
  for (int r = 0; r < bins_r; ++r)
    for (int t = 0; t < bins_t; ++t) {
      double v = out.at(r, t);
      out.p_r[r] += v;
      out.p_t[t] += v;
    }
  return out;
}

JointPdf joint_pdf(const std::vector<double>& A, const std::vector<double>& B,
                   std::size_t n_x, int bins_r, int bins_t) {
  if (n_x == 0) throw ConfigError("joint_pdf: empty sample set");
  std::vector<double> P((std::size_t)bins_r * bins_t);
  kernels::matmul_tn(A.data(), B.data(), P.data(), n_x, (std::size_t)bins_r,
                     (std::size_t)bins_t);
  for (double& v : P) v /= (double)n_x;
  return joint_pdf_from_raw(std::move(P), bins_r, bins_t);
}

DerivativeTensorC build_derivative_tensor(const std::vector<double>& warped,
                                          const ssd::SteepestDescentMatrix& S,
                                          const ParzenConfig& cfg) {
  if (warped.size() != S.rows)
    throw ConfigError("derivative tensor: sample count mismatch");
  DerivativeTensorC C;
  C.rows = S.rows;
  C.bins_r = cfg.bins_r;
  C.params = S.cols;
  C.data.assign((std::size_t)cfg.bins_r * S.rows * S.cols, 0.0);
  const double deps_dI = -1.0 / cfg.bin_width_r;
#pragma omp parallel for schedule(static) if (kernels::parallel_enabled())
  for (long long k = 0; k < (long long)S.rows; ++k) {
    const double v = cfg.pos_r(warped[(std::size_t)k]);
    const double* srow = S.row((std::size_t)k);
    for (int r = 0; r < cfg.bins_r; ++r) {
      double eps = (double)r - v;
      if (eps <= -2.0 || eps >= 2.0) continue;
      double f = parzen_window3_deriv(eps) * deps_dI;
      if (f == 0.0) continue;
      double* dst = C.data.data() +
                    ((std::size_t)r * S.rows + (std::size_t)k) * S.cols;
      for (std::size_t p = 0; p < S.cols; ++p) dst[p] = f * srow[p];
    }
  }
  return C;
}

PdfDerivative joint_pdf_derivative(const std::vector<double>& B,
                                   const DerivativeTensorC& C,
                                   std::size_t n_x, int bins_t) {
  if (n_x != C.rows) throw ConfigError("pdf derivative: sample count mismatch");
  PdfDerivative out;
  out.bins_r = C.bins_r;
  out.bins_t = bins_t;
  out.params = C.params;
  out.data.assign(C.params * (std::size_t)bins_t * C.bins_r, 0.0);
  // P'[t,r,p] = -(1/N) sum_k B[k,t] C[k,r,p]; computed per r as B^T * C_r
  // giving bins_t x params panels, then scattered into [p][t][r] slices.
  std::vector<double> panel((std::size_t)bins_t * C.params);
  for (int r = 0; r < C.bins_r; ++r) {
    kernels::matmul_tn(B.data(), C.slice(r), panel.data(), n_x,
                       (std::size_t)bins_t, C.params);
    for (int t = 0; t < bins_t; ++t)
      for (std::size_t p = 0; p < C.params; ++p)
        out.data[(p * (std::size_t)bins_t + t) * C.bins_r + r] =
            -panel[(std::size_t)t * C.params + p] / (double)n_x;
  }
  return out;
}

double mi_value(const JointPdf& P) {
  double acc = 0.0;
  for (int r = 0; r < P.bins_r; ++r)
    for (int t = 0; t < P.bins_t; ++t) {
      double prt = P.at(r, t);
      if (prt < kPdfFloor) continue;
      double pr = P.p_r[r], pt = P.p_t[t];
      if (pr < kPdfFloor || pt < kPdfFloor) continue;
      acc += prt * std::log(prt / (pr * pt));
    }
  return acc;
}

MiGaussNewtonTerms mi_gauss_newton_terms(const JointPdf& P,
                                         const PdfDerivative& Pd) {
  if (P.bins_r != Pd.bins_r || P.bins_t != Pd.bins_t)
    throw ConfigError("mi terms: shape mismatch");
  MiGaussNewtonTerms out;
  const std::size_t np = Pd.params;
  out.G.assign(np, 0.0);
  out.H.assign(np * np, 0.0);
  out.value = mi_value(P);
  std::vector<double> pd_rt(np);
  for (int r = 0; r < P.bins_r; ++r) {
    const double pr = P.p_r[r];
    for (int t = 0; t < P.bins_t; ++t) {
      const double prt = P.at(r, t);
      if (prt < kPdfFloor || pr < kPdfFloor) continue;
      for (std::size_t p = 0; p < np; ++p) pd_rt[p] = Pd.at(t, r, p);
      const double lg = std::log(prt / pr);
      const double curv = 1.0 / prt - 1.0 / pr;
      for (std::size_t p = 0; p < np; ++p) {
        out.G[p] += pd_rt[p] * lg;
        const double gp = pd_rt[p] * curv;
        if (gp == 0.0) continue;
        for (std::size_t q = p; q < np; ++q) out.H[p * np + q] += gp * pd_rt[q];
      }
    }
  }
  for (std::size_t p = 0; p < np; ++p)
    for (std::size_t q = 0; q < p; ++q) out.H[p * np + q] = out.H[q * np + p];
  return out;
}

}  // namespace ppir::mi
