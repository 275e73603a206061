#include "ppir/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ppir/errors.hpp"
#include "ppir/kernels.hpp"

namespace ppir::opt {

void OptimizerConfig::validate() const {
  if (!(epsilon > 0)) throw ConfigError("optimizer: epsilon must be > 0");
  if (max_iters < 1) throw ConfigError("optimizer: max_iters must be >= 1");
  if (levels.empty()) throw ConfigError("optimizer: levels must be nonempty");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i].scale > levels[i - 1].scale)
      throw ConfigError("optimizer: level scales must be non-increasing");
  for (const auto& l : levels)
    if (l.scale < 1 || l.sigma < 0) throw ConfigError("optimizer: bad level");
  if (!(step_damping > 0) || step_damping > 1.0)
    throw ConfigError("optimizer: step_damping must be in (0, 1]");
  if (sampling != Sampling::full &&
      (!(sample_fraction > 0) || sample_fraction > 1.0))
    throw ConfigError("optimizer: sample_fraction must be in (0, 1]");
}

int RegistrationResult::total_iterations() const {
  int n = 0;
  for (const auto& l : levels) n += (int)l.iters.size();
  return n;
}

std::vector<double> gauss_newton_step(const std::vector<double>& G,
                                      const std::vector<double>& H,
                                      double ridge) {
  const std::size_t n = G.size();
  if (H.size() != n * n) throw ConfigError("gauss_newton_step: shape mismatch");
  std::vector<double> A(H);
  for (std::size_t i = 0; i < n; ++i) A[i * n + i] += ridge;
  // Cholesky A = L L^T
  std::vector<double> L(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = A[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
      if (i == j) {
        if (!(s > 0.0))
          throw NumericError("gauss_newton_step: H singular after ridge");
        L[i * n + i] = std::sqrt(s);
      } else {
        L[i * n + j] = s / L[j * n + j];
      }
    }
  }
  // Solve L y = -G, then L^T d = y.
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = -G[i];
    for (std::size_t k = 0; k < i; ++k) s -= L[i * n + k] * d[k];
    d[i] = s / L[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = d[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= L[k * n + ii] * d[k];
    d[ii] = s / L[ii * n + ii];
  }
  return d;
}

namespace {

std::array<double, 3> coord_of(std::size_t idx, const std::vector<int>& dims) {
  std::array<double, 3> c{0, 0, 0};
  std::size_t rem = idx;
  c[0] = (double)(rem % (std::size_t)dims[0]);
  rem /= (std::size_t)dims[0];
  c[1] = (double)(rem % (std::size_t)dims[1]);
  rem /= (std::size_t)dims[1];
  if (dims.size() > 2) c[2] = (double)rem;
  return c;
}

}  // namespace

std::vector<std::array<double, 3>> sample_coords(
    Sampling strategy, const std::vector<int>& dims, std::size_t l,
    std::mt19937_64& rng, const std::vector<img::Image>* grad,
    bool* fallback) {
  std::size_t n = 1;
  for (int d : dims) n *= (std::size_t)d;
  std::vector<std::array<double, 3>> out;
  if (strategy == Sampling::full) {
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(coord_of(i, dims));
    return out;
  }
  if (l > n) throw ConfigError("sample_coords: l exceeds voxel count");
  if (l == 0) throw ConfigError("sample_coords: l must be >= 1");

  if (strategy == Sampling::gms) {
    if (!grad) throw ConfigError("sample_coords: gms needs gradient images");
    std::vector<double> w(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (const auto& g : *grad) s += g.data[i] * g.data[i];
      w[i] = std::sqrt(s);
      total += w[i];
    }
    if (total <= 0.0) {
      if (fallback) *fallback = true;
      strategy = Sampling::urs;  // all-zero gradient
    } else {
      out.reserve(l);
      for (std::size_t k = 0; k < l; ++k) {
        double u = canonical_u01(rng) * total;
        double cum = 0.0;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          if (w[i] == 0.0) continue;
          cum += w[i];
          if (u < cum) {
            pick = i;
            break;
          }
        }
        out.push_back(coord_of(pick, dims));
        total -= w[pick];  // draw without replacement, renormalized
        w[pick] = 0.0;
        if (total <= 0.0 && k + 1 < l)
          throw NumericError("sample_coords: gradient mass exhausted");
      }
      return out;
    }
  }

  // urs: partial Fisher-Yates, l distinct coordinates
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  out.reserve(l);
  for (std::size_t i = 0; i < l; ++i) {
    std::size_t j = i + (std::size_t)(canonical_u01(rng) * (double)(n - i));
    std::swap(idx[i], idx[j]);
    out.push_back(coord_of(idx[i], dims));
  }
  return out;
}

// ------------------------------------------------------------ ClearBackend

std::vector<int> ClearBackend::set_level(int scale, double sigma) {
  level_ = img::make_level(J_, scale, sigma);
  cfg_t_ = mi::ParzenConfig{};  // refreshed on demand in joint_pdf
  return level_.image.dims;
}

void ClearBackend::set_samples(const std::vector<std::array<double, 3>>& coords) {
  target_ = ssd::target_samples(level_.image, coords);
  B_.clear();
}

std::vector<double> ClearBackend::matvec_r(const ssd::SteepestDescentMatrix& S) {
  std::vector<double> R(S.cols);
  kernels::matvec_tn(S.data.data(), target_.data(), R.data(), S.rows, S.cols);
  return R;
}

double ClearBackend::cross_dot(const std::vector<double>& warped) {
  double acc = 0.0;
  for (std::size_t i = 0; i < warped.size(); ++i) acc += warped[i] * target_[i];
  return acc;
}

double ClearBackend::target_sq_sum() {
  double acc = 0.0;
  for (double t : target_) acc += t * t;
  return acc;
}

mi::JointPdf ClearBackend::joint_pdf(const std::vector<double>& A, int bins_r,
                                     int bins_t) {
  if (B_.empty() || cfg_t_.bins_t != bins_t) {
    cfg_t_ = mi::make_parzen_config(bins_r, bins_t, level_.image.vmin,
                                    level_.image.vmax, level_.image.vmin,
                                    level_.image.vmax);
    B_ = mi::build_matrix_b(target_, cfg_t_);
  }
  return mi::joint_pdf(A, B_, target_.size(), bins_r, bins_t);
}

mi::PdfDerivative ClearBackend::pdf_derivative(const mi::DerivativeTensorC& C,
                                               int bins_t) {
  if (B_.empty())
    throw ConfigError("pdf_derivative: joint_pdf must run first");
  return mi::joint_pdf_derivative(B_, C, target_.size(), bins_t);
}

// ---------------------------------------------------------------- register

namespace {

struct CostEval {
  double value = 0.0;
  ssd::SteepestDescentMatrix S;
  std::vector<double> G;
  std::vector<double> H;
};

// Evaluates the cost (and optionally the Gauss-Newton terms) at theta over
// the current samples.
class LevelProblem {
 public:
  LevelProblem(const img::PyramidLevel& I_level, CostBackend& backend,
               CostKind cost, int mi_bins)
      : I_(I_level), backend_(backend), cost_(cost), mi_bins_(mi_bins) {
    grad_ = img::gradient(I_.image);
  }

  const std::vector<img::Image>& grad() const { return grad_; }

  void set_samples(const std::vector<std::array<double, 3>>& coords) {
    coords_ = coords;
    backend_.set_samples(coords);
    t_sq_ = -1.0;
  }

  double cost_only(const tf::Transform& theta) {
    auto w = ssd::warp_samples(I_.image, theta, coords_);
    if (cost_ == CostKind::ssd) return ssd_cost(w);
    auto cfg = r_config(w);
    auto A = mi::build_matrix_a(w, cfg);
    auto P = backend_.joint_pdf(A, cfg.bins_r, cfg.bins_t);
    return -mi::mi_value(P);
  }

  CostEval full_eval(const tf::Transform& theta) {
    CostEval out;
    auto w = ssd::warp_samples(I_.image, theta, coords_);
    out.S = ssd::build_steepest_descent(grad_, theta, coords_);
    if (cost_ == CostKind::ssd) {
      auto R = backend_.matvec_r(out.S);
      auto terms = ssd::ssd_terms_with_r(out.S, w, R);
      out.G = std::move(terms.G);
      out.H = std::move(terms.H);
      out.value = ssd_cost(w);
    } else {
      auto cfg = r_config(w);
      auto A = mi::build_matrix_a(w, cfg);
      auto C = mi::build_derivative_tensor(w, out.S, cfg);
      auto P = backend_.joint_pdf(A, cfg.bins_r, cfg.bins_t);
      auto Pd = backend_.pdf_derivative(C, cfg.bins_t);
      auto terms = mi::mi_gauss_newton_terms(P, Pd);
      out.value = -terms.value;
      // f = -MI; descent gradient flips sign, curvature surrogate kept.
      out.G.resize(terms.G.size());
      for (std::size_t i = 0; i < terms.G.size(); ++i) out.G[i] = -terms.G[i];
      out.H = std::move(terms.H);
    }
    if (!std::isfinite(out.value))
      throw NumericError("register: non-finite cost");
    return out;
  }

 private:
  double ssd_cost(const std::vector<double>& w) {
    double wsq = 0.0;
    for (double v : w) wsq += v * v;
    if (t_sq_ < 0.0) t_sq_ = backend_.target_sq_sum();
    return ssd::ssd_from_parts(wsq, backend_.cross_dot(w), t_sq_);
  }

  mi::ParzenConfig r_config(const std::vector<double>& w) const {
    double lo = w.empty() ? 0.0 : w[0], hi = lo;
    for (double v : w) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return mi::make_parzen_config(mi_bins_, mi_bins_, lo, hi, 0.0, 1.0);
  }

  const img::PyramidLevel& I_;
  CostBackend& backend_;
  CostKind cost_;
  int mi_bins_;
  std::vector<std::array<double, 3>> coords_;
  std::vector<img::Image> grad_;
  double t_sq_ = -1.0;
};

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

RegistrationResult register_images(const img::Image& I, CostBackend& backend,
                                   const tf::Transform& init, CostKind cost,
                                   const OptimizerConfig& config) {
  config.validate();
  RegistrationResult res;
  res.transform = init;
  std::mt19937_64 sample_rng(config.seed);
  const auto t_start = std::chrono::steady_clock::now();

  int prev_scale = 0;
  try {
    for (std::size_t li = 0; li < config.levels.size(); ++li) {
      const auto& spec = config.levels[li];
      img::PyramidLevel I_level =
          img::make_level(I, spec.scale, spec.sigma);
      std::vector<int> J_dims = backend.set_level(spec.scale, spec.sigma);
      // init and result are full-resolution transforms
      const double ratio = prev_scale == 0
                               ? 1.0 / spec.scale
                               : (double)prev_scale / spec.scale;
      if (ratio != 1.0 ||
          std::holds_alternative<tf::BSplineGrid>(res.transform))
        res.transform = tf::rescale_transform(res.transform, ratio, J_dims);
      prev_scale = spec.scale;

      LevelProblem problem(I_level, backend, cost, config.mi_bins);
      LevelTrace trace;
      trace.scale = spec.scale;
      auto bytes0 = backend.party_bytes();

      std::size_t n_vox = 1;
      for (int d : J_dims) n_vox *= (std::size_t)d;
      std::size_t l = config.sampling == Sampling::full
                          ? n_vox
                          : std::max<std::size_t>(
                                1, (std::size_t)std::llround(
                                       config.sample_fraction * (double)n_vox));

      if (config.sampling == Sampling::gms && I_level.image.dims != J_dims)
        throw ConfigError("register: gms requires matching level grids");

      for (int iter = 0; iter < config.max_iters; ++iter) {
        bool fb = false;
        auto coords = sample_coords(config.sampling, J_dims, l, sample_rng,
                                    &problem.grad(), &fb);
        if (fb) res.gms_fallback = true;
        problem.set_samples(coords);

        CostEval ev = problem.full_eval(res.transform);
        const std::size_t np = ev.G.size();
        double tr = 0.0;
        for (std::size_t i = 0; i < np; ++i) tr += ev.H[i * np + i];
        const double ridge = 1e-6 * tr / (double)np;

        std::vector<double> delta;
        try {
          delta = gauss_newton_step(ev.G, ev.H, ridge);
        } catch (const NumericError&) {
          // retry with a stiffer ridge before giving up on the level
          delta = gauss_newton_step(ev.G, ev.H,
                                    std::max(1e-8, 1e3 * ridge) + 1e-12);
        }
        for (double& d : delta) d *= config.step_damping;

        tf::Transform trial = res.transform;
        tf::add_theta(trial, delta);
        double trial_cost = problem.cost_only(trial);
        int halvings = 0;
        while (trial_cost > ev.value && halvings < 5) {
          for (double& d : delta) d *= 0.5;
          trial = res.transform;
          tf::add_theta(trial, delta);
          trial_cost = problem.cost_only(trial);
          ++halvings;
        }
        if (trial_cost > ev.value) break;  // no acceptable step left

        res.transform = trial;
        IterationRecord rec;
        rec.cost = trial_cost;
        rec.step_norm = norm2(delta);
        rec.halvings = halvings;
        rec.delta_theta = delta;
        trace.iters.push_back(std::move(rec));
        if (trace.iters.back().step_norm <= config.epsilon) break;
      }

      auto bytes1 = backend.party_bytes();
      trace.bytes_p1 = bytes1.first - bytes0.first;
      trace.bytes_p2 = bytes1.second - bytes0.second;
      res.levels.push_back(std::move(trace));
    }

    // express the final transform on the full-resolution grid
    if (prev_scale > 1) {
      std::vector<int> full_dims = backend.set_level(1, 0.0);
      res.transform =
          tf::rescale_transform(res.transform, (double)prev_scale, full_dims);
      res.field_dims = full_dims;
    } else {
      res.field_dims = backend.set_level(1, 0.0);
    }
    res.displacement = tf::displacement_field(res.transform, res.field_dims);
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
  }
  res.party1_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  res.party2_time_s = backend.party2_time();
  return res;
}

}  // namespace ppir::opt
