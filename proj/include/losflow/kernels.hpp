#pragma once

// Data-parallel arithmetic used by the trainable classifiers and SMOTE.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The variant is picked once at startup from CPUID and can
// be overridden (tests compare the two). Results agree to rounding only: the
// vector variants sum in a different order.

#include <cstddef>
#include <span>
#include <string_view>

namespace losflow::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

/// Best ISA this binary was built with and the CPU supports.
Isa detected_isa();
Isa active_isa();
/// Selects the kernel family. Requesting an unsupported ISA falls back to scalar
/// and returns false.
bool set_isa(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// y = A x, A row-major rows x cols.
void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y);
/// y = A^T x, A row-major rows x cols.
void gemv_t(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y);

// Direct access to each family, for equivalence tests and benchmarks.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
void gemv_t(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
}  // namespace scalar

namespace avx2 {
bool available();
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
void gemv_t(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
}  // namespace avx2

}  // namespace losflow::kernels
