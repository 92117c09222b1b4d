#pragma once

#include <cstddef>
#include <string>

namespace riskmfg {

/// One explicit step of  p_t = -decay p - (slope x + shift) p_x + D p_xx  on interior nodes 1..n-2,
/// with x_j = x0 + j dx. out[0] and out[n-1] are set to 0.
struct Stencil1D {
    double x0, dx, dt;
    double decay, slope, shift, D;
};

/// One explicit step of
///   p_t = -decay p - v1 p_x - v2 p_xb + D11 p_xx + 2 D12 p_xxb + D22 p_xbxb,
///   v1 = s11 x + s12 xb + c1,  v2 = s22 xb + c2,
/// on a row-major (x, xb) grid, p[i * nb + m]. Boundary rows and columns are set to 0.
struct Stencil2D {
    double x0, dx, xb0, dxb, dt;
    double decay, s11, s12, c1, s22, c2;
    double D11, D12, D22;
};

enum class Isa { scalar, avx2 };

bool isa_available(Isa isa);
/// Widest instruction set supported by this CPU and build.
Isa best_isa();
std::string to_string(Isa isa);

/// Sum and minimum of p[0..n), accumulated in four interleaved lanes (lane k takes indices = k mod 4)
/// and combined as (l0 + l1) + (l2 + l3), so every instruction set returns the same bits.
struct SumMin {
    double sum;
    double min;
};

namespace kernels {
SumMin sum_min_scalar(const double* p, std::size_t n);
void step1d_scalar(const double* p, double* out, std::size_t n, const Stencil1D& s);
void step2d_scalar(const double* p, double* out, std::size_t nx, std::size_t nb, const Stencil2D& s);
#if defined(RISKMFG_HAVE_AVX2)
void step1d_avx2(const double* p, double* out, std::size_t n, const Stencil1D& s);
void step2d_avx2(const double* p, double* out, std::size_t nx, std::size_t nb, const Stencil2D& s);
SumMin sum_min_avx2(const double* p, std::size_t n);
#endif
}  // namespace kernels

/// Flushes subnormal results and inputs to zero on this thread while alive (x86 only; no-op elsewhere).
class DenormalGuard {
public:
    DenormalGuard();
    ~DenormalGuard();
    DenormalGuard(const DenormalGuard&) = delete;
    DenormalGuard& operator=(const DenormalGuard&) = delete;

private:
    unsigned saved_ = 0;
};

void step1d(const double* p, double* out, std::size_t n, const Stencil1D& s, Isa isa);
void step2d(const double* p, double* out, std::size_t nx, std::size_t nb, const Stencil2D& s, Isa isa);
SumMin sum_min(const double* p, std::size_t n, Isa isa);

}  // namespace riskmfg
