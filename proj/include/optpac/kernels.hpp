#pragma once

// Dense arithmetic kernels used by the backward (Bellman) and forward
// (visitation) sweeps. Every kernel has a scalar reference implementation;
// wider variants are selected once at runtime from the CPU feature set and
// can be overridden with OPTPAC_SIMD=scalar|avx2|auto or select_backend().

#include <cstddef>
#include <span>
#include <string_view>

namespace optpac::kernels {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
    Backend backend;
    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // Fused pair of dot products sharing the left operand.
    void (*dot2)(const double* p, const double* x, const double* y, std::size_t n,
                 double* px, double* py);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& table(Backend backend);
const KernelTable& active();

bool backend_supported(Backend backend);
// Throws std::invalid_argument if the backend is not compiled in or not
// supported by this CPU.
void select_backend(Backend backend);
Backend active_backend();
std::string_view backend_name(Backend backend);

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline void dot2(std::span<const double> p, std::span<const double> x,
                 std::span<const double> y, double& px, double& py) {
    active().dot2(p.data(), x.data(), y.data(), p.size(), &px, &py);
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void dot2(const double* p, const double* x, const double* y, std::size_t n, double* px,
          double* py);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

#if defined(OPTPAC_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void dot2(const double* p, const double* x, const double* y, std::size_t n, double* px,
          double* py);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

}  // namespace optpac::kernels
