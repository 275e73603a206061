#include "ppir/kernels.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ppir::kernels {

namespace {
std::atomic<ExecMode> g_mode{ExecMode::parallel};
constexpr std::uint64_t kMask32 = 0xFFFFFFFFull;
}  // namespace

ExecMode exec_mode() { return g_mode.load(std::memory_order_relaxed); }
void set_exec_mode(ExecMode m) { g_mode.store(m, std::memory_order_relaxed); }
bool parallel_enabled() { return exec_mode() == ExecMode::parallel; }

void matmul_tn_serial(const double* A, const double* B, double* C,
                      std::size_t n, std::size_t m, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) acc += A[t * m + i] * B[t * k + j];
      C[i * k + j] = acc;
    }
  }
}

void matmul_tn_parallel(const double* A, const double* B, double* C,
                        std::size_t n, std::size_t m, std::size_t k) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < n; ++t)
        acc += A[t * m + (std::size_t)i] * B[t * k + j];
      C[(std::size_t)i * k + j] = acc;
    }
  }
}

void matmul_tn(const double* A, const double* B, double* C,
               std::size_t n, std::size_t m, std::size_t k) {
  if (parallel_enabled())
    matmul_tn_parallel(A, B, C, n, m, k);
  else
    matmul_tn_serial(A, B, C, n, m, k);
}

void matvec_tn_serial(const double* A, const double* x, double* y,
                      std::size_t n, std::size_t m) {
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) acc += A[t * m + i] * x[t];
    y[i] = acc;
  }
}

void matvec_tn_parallel(const double* A, const double* x, double* y,
                        std::size_t n, std::size_t m) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)m; ++i) {
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) acc += A[t * m + (std::size_t)i] * x[t];
    y[(std::size_t)i] = acc;
  }
}

void matvec_tn(const double* A, const double* x, double* y,
               std::size_t n, std::size_t m) {
  if (parallel_enabled())
    matvec_tn_parallel(A, x, y, n, m);
  else
    matvec_tn_serial(A, x, y, n, m);
}

namespace {

inline void conv_point(const double* src, double* dst, const std::size_t* dims,
                       int axis, const double* kernel, int radius,
                       std::size_t i0, std::size_t i1, std::size_t i2,
                       std::size_t s0, std::size_t s1, std::size_t s2) {
  const std::size_t idx[3] = {i0, i1, i2};
  const std::size_t stride[3] = {s0, s1, s2};
  const long long extent = (long long)dims[axis];
  const long long center = (long long)idx[axis];
  const std::size_t base = i0 * s0 + i1 * s1 + i2 * s2;
  const std::size_t off = base - (std::size_t)center * stride[axis];
  double acc = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    long long p = center + t;
    if (p < 0) p = 0;
    if (p >= extent) p = extent - 1;
    acc += kernel[t + radius] * src[off + (std::size_t)p * stride[axis]];
  }
  dst[base] = acc;
}

}  // namespace

void conv_axis_serial(const double* src, double* dst, const std::size_t* dims,
                      int ndim, int axis, const double* kernel, int radius) {
  std::size_t d[3] = {dims[0], ndim > 1 ? dims[1] : 1, ndim > 2 ? dims[2] : 1};
  // axis 0 is the fastest-varying one (index = x + d0*(y + d1*z)).
  const std::size_t s0 = 1, s1 = d[0], s2 = d[0] * d[1];
  for (std::size_t z = 0; z < d[2]; ++z)
    for (std::size_t y = 0; y < d[1]; ++y)
      for (std::size_t x = 0; x < d[0]; ++x)
        conv_point(src, dst, d, axis, kernel, radius, x, y, z, s0, s1, s2);
}

void conv_axis_parallel(const double* src, double* dst, const std::size_t* dims,
                        int ndim, int axis, const double* kernel, int radius) {
  std::size_t d[3] = {dims[0], ndim > 1 ? dims[1] : 1, ndim > 2 ? dims[2] : 1};
  const std::size_t s0 = 1, s1 = d[0], s2 = d[0] * d[1];
  const long long planes = (long long)(d[1] * d[2]);
#pragma omp parallel for schedule(static)
  for (long long p = 0; p < planes; ++p) {
    const std::size_t y = (std::size_t)p % d[1];
    const std::size_t z = (std::size_t)p / d[1];
    for (std::size_t x = 0; x < d[0]; ++x)
      conv_point(src, dst, d, axis, kernel, radius, x, y, z, s0, s1, s2);
  }
}

void conv_axis(const double* src, double* dst, const std::size_t* dims,
               int ndim, int axis, const double* kernel, int radius) {
  if (parallel_enabled())
    conv_axis_parallel(src, dst, dims, ndim, axis, kernel, radius);
  else
    conv_axis_serial(src, dst, dims, ndim, axis, kernel, radius);
}

#define PPIR_RING_OP(name, expr)                                              \
  void name##_serial(const std::uint64_t* a, const std::uint64_t* b,          \
                     std::uint64_t* out, std::size_t n) {                     \
    for (std::size_t i = 0; i < n; ++i) out[i] = (expr) & kMask32;            \
  }                                                                           \
  void name##_parallel(const std::uint64_t* a, const std::uint64_t* b,        \
                       std::uint64_t* out, std::size_t n) {                   \
    _Pragma("omp parallel for schedule(static)")                              \
    for (long long i = 0; i < (long long)n; ++i)                              \
      out[i] = (expr) & kMask32;                                              \
  }                                                                           \
  void name(const std::uint64_t* a, const std::uint64_t* b,                   \
            std::uint64_t* out, std::size_t n) {                              \
    if (parallel_enabled())                                                   \
      name##_parallel(a, b, out, n);                                          \
    else                                                                      \
      name##_serial(a, b, out, n);                                            \
  }

PPIR_RING_OP(ring_add, a[i] + b[i])
PPIR_RING_OP(ring_sub, a[i] - b[i])
PPIR_RING_OP(ring_mul, a[i] * b[i])

#undef PPIR_RING_OP

}  // namespace ppir::kernels
