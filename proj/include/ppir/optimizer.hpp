#pragma once

#include <memory>
#include <random>
#include <string>

#include "ppir/backend.hpp"
#include "ppir/image.hpp"
#include "ppir/mi.hpp"
#include "ppir/ssd.hpp"
#include "ppir/transform.hpp"

namespace ppir::opt {

enum class Sampling { full, urs, gms };
enum class BackendKind { clear, mpc, fhe_v1, fhe_v2 };
enum class CostKind { ssd, mi };

struct LevelSpec {
  int scale = 1;
  double sigma = 0.0;
};

struct OptimizerConfig {
  double epsilon = 1e-4;       // convergence threshold on |delta theta|
  int max_iters = 100;         // per level
  std::vector<LevelSpec> levels{{1, 0.0}};
  Sampling sampling = Sampling::full;
  double sample_fraction = 0.1;  // l = round(fraction * N_x) for urs/gms
  BackendKind backend = BackendKind::clear;
  std::uint64_t seed = 42;
  double step_damping = 1.0;   // in (0, 1]
  int mi_bins = 32;

  void validate() const;
};

struct IterationRecord {
  double cost = 0.0;        // accepted cost after the step
  double step_norm = 0.0;   // |delta theta| of the accepted step
  int halvings = 0;
  std::vector<double> delta_theta;
};

struct LevelTrace {
  int scale = 1;
  std::vector<IterationRecord> iters;
  std::uint64_t bytes_p1 = 0;  // ledger deltas attributable to this level
  std::uint64_t bytes_p2 = 0;
};

struct RegistrationResult {
  tf::Transform transform{tf::AffineParams::identity(2)};
  std::vector<LevelTrace> levels;
  std::vector<double> displacement;  // final field, finest level grid
  std::vector<int> field_dims;
  bool ok = false;
  bool gms_fallback = false;  // gms degenerated to urs at least once
  std::string error;
  double party1_time_s = 0.0;
  double party2_time_s = 0.0;

  int total_iterations() const;
};

// Uniform double in [0, 1) with a pinned mapping (bit-reproducible).
inline double canonical_u01(std::mt19937_64& rng) {
  return (double)(rng() >> 11) * 0x1.0p-53;
}

// Solves (H + ridge*I) d = -G via Cholesky; throws NumericError when the
// factorization fails even after the ridge.
std::vector<double> gauss_newton_step(const std::vector<double>& G,
                                      const std::vector<double>& H,
                                      double ridge);

// full: all voxels; urs: l distinct uniform draws; gms: l distinct draws
// with probability proportional to |grad I|, renormalized after each draw.
// grad may be null except for gms. Falls back to urs on all-zero gradient
// (reported through *fallback when given).
std::vector<std::array<double, 3>> sample_coords(
    Sampling strategy, const std::vector<int>& dims, std::size_t l,
    std::mt19937_64& rng, const std::vector<img::Image>* grad = nullptr,
    bool* fallback = nullptr);

// In-process backend over a cleartext J.
class ClearBackend : public CostBackend {
 public:
  explicit ClearBackend(img::Image J) : J_(std::move(J)) {}

  std::vector<int> set_level(int scale, double sigma) override;
  void set_samples(const std::vector<std::array<double, 3>>& coords) override;
  std::vector<double> matvec_r(const ssd::SteepestDescentMatrix& S) override;
  double cross_dot(const std::vector<double>& warped) override;
  double target_sq_sum() override;
  mi::JointPdf joint_pdf(const std::vector<double>& A, int bins_r,
                         int bins_t) override;
  mi::PdfDerivative pdf_derivative(const mi::DerivativeTensorC& C,
                                   int bins_t) override;

  const img::Image& level_image() const { return level_.image; }

 private:
  img::Image J_;
  img::PyramidLevel level_;
  std::vector<double> target_;
  mi::ParzenConfig cfg_t_;
  std::vector<double> B_;
};

// Gauss-Newton registration of moving image I against the backend's J.
RegistrationResult register_images(const img::Image& I, CostBackend& backend,
                                   const tf::Transform& init, CostKind cost,
                                   const OptimizerConfig& config);

}  // namespace ppir::opt
