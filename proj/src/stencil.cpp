#include "riskmfg/stencil.hpp"

#include "riskmfg/errors.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <xmmintrin.h>
#define RISKMFG_X86 1
#endif

namespace riskmfg {

DenormalGuard::DenormalGuard() {
#if defined(RISKMFG_X86)
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040U);  // FTZ | DAZ
#endif
}

DenormalGuard::~DenormalGuard() {
#if defined(RISKMFG_X86)
    _mm_setcsr(saved_);
#endif
}

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(RISKMFG_HAVE_AVX2)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
    }
    return false;
}

Isa best_isa() { return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

std::string to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void step1d(const double* p, double* out, std::size_t n, const Stencil1D& s, Isa isa) {
    if (n < 3) throw ConfigError("stencil needs at least 3 nodes");
#if defined(RISKMFG_HAVE_AVX2)
    if (isa == Isa::avx2) return kernels::step1d_avx2(p, out, n, s);
#endif
    (void)isa;
    kernels::step1d_scalar(p, out, n, s);
}

void step2d(const double* p, double* out, std::size_t nx, std::size_t nb, const Stencil2D& s, Isa isa) {
    if (nx < 3 || nb < 3) throw ConfigError("stencil needs at least 3 nodes per axis");
#if defined(RISKMFG_HAVE_AVX2)
    if (isa == Isa::avx2) return kernels::step2d_avx2(p, out, nx, nb, s);
#endif
    (void)isa;
    kernels::step2d_scalar(p, out, nx, nb, s);
}

}  // namespace riskmfg

namespace riskmfg {

SumMin sum_min(const double* p, std::size_t n, Isa isa) {
    if (n == 0) return {0.0, 0.0};
#if defined(RISKMFG_HAVE_AVX2)
    if (isa == Isa::avx2) return kernels::sum_min_avx2(p, n);
#endif
    (void)isa;
    return kernels::sum_min_scalar(p, n);
}

}  // namespace riskmfg
