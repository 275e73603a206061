#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops used across the library. Every kernel has a
// serial reference implementation and an OpenMP variant that parallelizes
// over independent outputs only, so both produce bit-identical results.
// The unsuffixed entry points dispatch on the global execution mode.

namespace ppir::kernels {

enum class ExecMode { serial, parallel };

ExecMode exec_mode();
void set_exec_mode(ExecMode m);
bool parallel_enabled();

// C = A^T * B with A: n x m, B: n x k, C: m x k, all row-major.
void matmul_tn_serial(const double* A, const double* B, double* C,
                      std::size_t n, std::size_t m, std::size_t k);
void matmul_tn_parallel(const double* A, const double* B, double* C,
                        std::size_t n, std::size_t m, std::size_t k);
void matmul_tn(const double* A, const double* B, double* C,
               std::size_t n, std::size_t m, std::size_t k);

// y = A^T * x with A: n x m row-major, x: n, y: m.
void matvec_tn_serial(const double* A, const double* x, double* y,
                      std::size_t n, std::size_t m);
void matvec_tn_parallel(const double* A, const double* x, double* y,
                        std::size_t n, std::size_t m);
void matvec_tn(const double* A, const double* x, double* y,
               std::size_t n, std::size_t m);

// Separable 1-D convolution along one axis of a row-major volume.
// dims: extents (max 3 axes), axis: convolved axis, kernel of odd length
// 2*radius+1, border handled by edge replication.
void conv_axis_serial(const double* src, double* dst, const std::size_t* dims,
                      int ndim, int axis, const double* kernel, int radius);
void conv_axis_parallel(const double* src, double* dst, const std::size_t* dims,
                        int ndim, int axis, const double* kernel, int radius);
void conv_axis(const double* src, double* dst, const std::size_t* dims,
               int ndim, int axis, const double* kernel, int radius);

// out[i] = (a[i] + b[i]) mod 2^32 and friends, on 64-bit residues < 2^32.
void ring_add_serial(const std::uint64_t* a, const std::uint64_t* b,
                     std::uint64_t* out, std::size_t n);
void ring_add_parallel(const std::uint64_t* a, const std::uint64_t* b,
                       std::uint64_t* out, std::size_t n);
void ring_add(const std::uint64_t* a, const std::uint64_t* b,
              std::uint64_t* out, std::size_t n);

void ring_sub_serial(const std::uint64_t* a, const std::uint64_t* b,
                     std::uint64_t* out, std::size_t n);
void ring_sub_parallel(const std::uint64_t* a, const std::uint64_t* b,
                       std::uint64_t* out, std::size_t n);
void ring_sub(const std::uint64_t* a, const std::uint64_t* b,
              std::uint64_t* out, std::size_t n);

void ring_mul_serial(const std::uint64_t* a, const std::uint64_t* b,
                     std::uint64_t* out, std::size_t n);
void ring_mul_parallel(const std::uint64_t* a, const std::uint64_t* b,
                       std::uint64_t* out, std::size_t n);
void ring_mul(const std::uint64_t* a, const std::uint64_t* b,
              std::uint64_t* out, std::size_t n);

}  // namespace ppir::kernels
