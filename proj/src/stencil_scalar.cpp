#include "riskmfg/stencil.hpp"

#include <algorithm>

namespace riskmfg::kernels {

// The AVX2 kernels evaluate the same expressions in the same order.

SumMin sum_min_scalar(const double* p, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    double lo[4] = {p[0], p[0], p[0], p[0]};
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4)
        for (int k = 0; k < 4; ++k) {
            acc[k] += p[j + k];
            lo[k] = lo[k] < p[j + k] ? lo[k] : p[j + k];
        }
    double sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    double mn = std::min(std::min(lo[0], lo[1]), std::min(lo[2], lo[3]));
    for (; j < n; ++j) {
        sum += p[j];
        mn = std::min(mn, p[j]);
    }
    return {sum, mn};
}

void step1d_scalar(const double* p, double* out, std::size_t n, const Stencil1D& s) {
    const double inv2dx = 1.0 / (2.0 * s.dx);
    const double invdx2 = 1.0 / (s.dx * s.dx);
    out[0] = 0.0;
    out[n - 1] = 0.0;
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double x = s.x0 + static_cast<double>(j) * s.dx;
        const double v = s.slope * x + s.shift;
        const double px = (p[j + 1] - p[j - 1]) * inv2dx;
        const double pxx = ((p[j + 1] - 2.0 * p[j]) + p[j - 1]) * invdx2;
        const double L = (s.D * pxx - v * px) - s.decay * p[j];
        out[j] = p[j] + s.dt * L;
    }
}

void step2d_scalar(const double* p, double* out, std::size_t nx, std::size_t nb, const Stencil2D& s) {
    const double inv2dx = 1.0 / (2.0 * s.dx);
    const double inv2dxb = 1.0 / (2.0 * s.dxb);
    const double invdx2 = 1.0 / (s.dx * s.dx);
    const double invdxb2 = 1.0 / (s.dxb * s.dxb);
    const double inv4 = 1.0 / (4.0 * s.dx * s.dxb);
    const double twoD12 = 2.0 * s.D12;
    for (std::size_t m = 0; m < nb; ++m) {
        out[m] = 0.0;
        out[(nx - 1) * nb + m] = 0.0;
    }
    for (std::size_t i = 1; i + 1 < nx; ++i) {
        const double x = s.x0 + static_cast<double>(i) * s.dx;
        const double* r = p + i * nb;
        const double* up = r + nb;
        const double* dn = r - nb;
        double* o = out + i * nb;
        o[0] = 0.0;
        o[nb - 1] = 0.0;
        const double vx = s.s11 * x;
        for (std::size_t m = 1; m + 1 < nb; ++m) {
            const double xb = s.xb0 + static_cast<double>(m) * s.dxb;
            const double v1 = (vx + s.s12 * xb) + s.c1;
            const double v2 = s.s22 * xb + s.c2;
            const double c = r[m];
            const double px = (up[m] - dn[m]) * inv2dx;
            const double pb = (r[m + 1] - r[m - 1]) * inv2dxb;
            const double pxx = ((up[m] - 2.0 * c) + dn[m]) * invdx2;
            const double pbb = ((r[m + 1] - 2.0 * c) + r[m - 1]) * invdxb2;
            const double pxb = ((up[m + 1] - up[m - 1]) - (dn[m + 1] - dn[m - 1])) * inv4;
            const double diff = (s.D11 * pxx + twoD12 * pxb) + s.D22 * pbb;
            const double adv = v1 * px + v2 * pb;
            const double L = (diff - adv) - s.decay * c;
            o[m] = c + s.dt * L;
        }
    }
}

}  // namespace riskmfg::kernels
