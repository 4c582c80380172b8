#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "optpac/kernels.hpp"

namespace optpac::kernels {

namespace {

const KernelTable kScalar{Backend::Scalar, &scalar::dot, &scalar::dot2, &scalar::axpy};

#if defined(OPTPAC_HAVE_AVX2)
const KernelTable kAvx2{Backend::Avx2, &avx2::dot, &avx2::dot2, &avx2::axpy};
#endif

bool cpu_has_avx2() {
#if defined(OPTPAC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* initial_table() {
    const char* env = std::getenv("OPTPAC_SIMD");
    const std::string choice = env ? env : "auto";
    if (choice == "scalar") return &kScalar;
    if (choice == "avx2") {
        if (!backend_supported(Backend::Avx2))
            throw std::runtime_error("OPTPAC_SIMD=avx2 requested but AVX2/FMA is unavailable");
        return &table(Backend::Avx2);
    }
    if (choice != "auto" && !choice.empty())
        throw std::runtime_error("OPTPAC_SIMD must be one of scalar, avx2, auto; got '" + choice + "'");
    return backend_supported(Backend::Avx2) ? &table(Backend::Avx2) : &kScalar;
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> ptr{initial_table()};
    return ptr;
}

}  // namespace

bool backend_supported(Backend backend) {
    switch (backend) {
        case Backend::Scalar: return true;
        case Backend::Avx2: {
            static const bool ok = cpu_has_avx2();
            return ok;
        }
    }
    return false;
}

const KernelTable& table(Backend backend) {
    if (!backend_supported(backend))
        throw std::invalid_argument(std::string("kernel backend not supported: ") +
                                    std::string(backend_name(backend)));
#if defined(OPTPAC_HAVE_AVX2)
    if (backend == Backend::Avx2) return kAvx2;
#endif
    return kScalar;
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void select_backend(Backend backend) { current().store(&table(backend)); }

Backend active_backend() { return active().backend; }

std::string_view backend_name(Backend backend) {
    switch (backend) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
    }
    return "unknown";
}

}  // namespace optpac::kernels
