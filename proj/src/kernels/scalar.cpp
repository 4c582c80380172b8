#include "optpac/kernels.hpp"

namespace optpac::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void dot2(const double* p, const double* x, const double* y, std::size_t n, double* px,
          double* py) {
    double ax = 0.0;
    double ay = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ax += p[i] * x[i];
        ay += p[i] * y[i];
    }
    *px = ax;
    *py = ay;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace optpac::kernels::scalar
