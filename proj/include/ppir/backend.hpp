#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ppir/image.hpp"
#include "ppir/mi.hpp"
#include "ppir/ssd.hpp"

namespace ppir {

// The optimizer runs as party1 and reaches everything that involves the
// template image J through this interface. The clear backend holds J
// in-process; secure backends forward to a two-party protocol session.
class CostBackend {
 public:
  virtual ~CostBackend() = default;

  // Rebuilds J's pyramid level; returns its dims (public metadata).
  virtual std::vector<int> set_level(int scale, double sigma) = 0;

  // Announces the sample coordinate set for subsequent ops.
  virtual void set_samples(const std::vector<std::array<double, 3>>& coords) = 0;

  // R = S^T * t over the current samples (the sensitive SSD product).
  virtual std::vector<double> matvec_r(const ssd::SteepestDescentMatrix& S) = 0;

  // w . t over the current samples (used for cost evaluation).
  virtual double cross_dot(const std::vector<double>& warped) = 0;

  // sum(t^2) over the current samples.
  virtual double target_sq_sum() = 0;

  // P = A^T B / N_x where B is the target-side one-hot histogram matrix.
  virtual mi::JointPdf joint_pdf(const std::vector<double>& A, int bins_r,
                                 int bins_t) = 0;

  // P' = -(1/N_x) B^T C per parameter slice.
  virtual mi::PdfDerivative pdf_derivative(const mi::DerivativeTensorC& C,
                                           int bins_t) = 0;

  // Cumulative bytes sent by each party (zero for the clear backend).
  virtual std::pair<std::uint64_t, std::uint64_t> party_bytes() const {
    return {0, 0};
  }
  // Accumulated party2 busy time in seconds (zero for clear).
  virtual double party2_time() const { return 0.0; }
};

}  // namespace ppir
