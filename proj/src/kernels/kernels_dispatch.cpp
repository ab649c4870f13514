#include <atomic>

#include "losflow/domain.hpp"
#include "losflow/kernels.hpp"

namespace losflow::kernels {

#ifndef LOSFLOW_HAVE_AVX2
namespace avx2 {
bool available() { return false; }
double dot(const double*, const double*, std::size_t) { throw InvariantError("avx2 kernels not built"); }
double squared_distance(const double*, const double*, std::size_t) { throw InvariantError("avx2 kernels not built"); }
void axpy(double, const double*, double*, std::size_t) { throw InvariantError("avx2 kernels not built"); }
void gemv(const double*, std::size_t, std::size_t, const double*, double*) {
  throw InvariantError("avx2 kernels not built");
}
void gemv_t(const double*, std::size_t, std::size_t, const double*, double*) {
  throw InvariantError("avx2 kernels not built");
}
}  // namespace avx2
#endif

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  double (*squared_distance)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*gemv)(const double*, std::size_t, std::size_t, const double*, double*);
  void (*gemv_t)(const double*, std::size_t, std::size_t, const double*, double*);
};

constexpr Table kScalar{scalar::dot, scalar::squared_distance, scalar::axpy, scalar::gemv, scalar::gemv_t};
constexpr Table kAvx2{avx2::dot, avx2::squared_distance, avx2::axpy, avx2::gemv, avx2::gemv_t};

Isa detect() { return avx2::available() ? Isa::avx2 : Isa::scalar; }

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

const Table& table() { return current().load(std::memory_order_relaxed) == Isa::avx2 ? kAvx2 : kScalar; }

void check(std::size_t a, std::size_t b) {
  if (a != b) throw InvariantError("kernel operand length mismatch");
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() { return detect(); }

Isa active_isa() { return current().load(); }

bool set_isa(Isa isa) {
  if (isa == Isa::avx2 && !avx2::available()) {
    current().store(Isa::scalar);
    return false;
  }
  current().store(isa);
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  check(a.size(), b.size());
  return table().dot(a.data(), b.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  check(a.size(), b.size());
  return table().squared_distance(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check(x.size(), y.size());
  table().axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y) {
  check(a.size(), rows * cols);
  check(x.size(), cols);
  check(y.size(), rows);
  table().gemv(a.data(), rows, cols, x.data(), y.data());
}

void gemv_t(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y) {
  check(a.size(), rows * cols);
  check(x.size(), rows);
  check(y.size(), cols);
  table().gemv_t(a.data(), rows, cols, x.data(), y.data());
}

}  // namespace losflow::kernels
