#include <immintrin.h>

#include <algorithm>

#include "riskmfg/stencil.hpp"

namespace riskmfg::kernels {

SumMin sum_min_avx2(const double* p, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    __m256d lo = _mm256_set1_pd(p[0]);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d v = _mm256_loadu_pd(p + j);
        acc = _mm256_add_pd(acc, v);
        lo = _mm256_min_pd(lo, v);
    }
    alignas(32) double a[4], l[4];
    _mm256_store_pd(a, acc);
    _mm256_store_pd(l, lo);
    double sum = (a[0] + a[1]) + (a[2] + a[3]);
    double mn = std::min(std::min(l[0], l[1]), std::min(l[2], l[3]));
    for (; j < n; ++j) {
        sum += p[j];
        mn = std::min(mn, p[j]);
    }
    return {sum, mn};
}

void step1d_avx2(const double* p, double* out, std::size_t n, const Stencil1D& s) {
    const double inv2dx = 1.0 / (2.0 * s.dx);
    const double invdx2 = 1.0 / (s.dx * s.dx);
    out[0] = 0.0;
    out[n - 1] = 0.0;
    const __m256d vx0 = _mm256_set1_pd(s.x0), vdx = _mm256_set1_pd(s.dx);
    const __m256d vslope = _mm256_set1_pd(s.slope), vshift = _mm256_set1_pd(s.shift);
    const __m256d vD = _mm256_set1_pd(s.D), vdecay = _mm256_set1_pd(s.decay), vdt = _mm256_set1_pd(s.dt);
    const __m256d vi2 = _mm256_set1_pd(inv2dx), vid2 = _mm256_set1_pd(invdx2), two = _mm256_set1_pd(2.0);
    std::size_t j = 1;
    for (; j + 4 < n; j += 4) {
        const double jd = static_cast<double>(j);
        const __m256d idx = _mm256_set_pd(jd + 3.0, jd + 2.0, jd + 1.0, jd);
        const __m256d x = _mm256_add_pd(vx0, _mm256_mul_pd(idx, vdx));
        const __m256d v = _mm256_add_pd(_mm256_mul_pd(vslope, x), vshift);
        const __m256d pl = _mm256_loadu_pd(p + j - 1);
        const __m256d pc = _mm256_loadu_pd(p + j);
        const __m256d pr = _mm256_loadu_pd(p + j + 1);
        const __m256d px = _mm256_mul_pd(_mm256_sub_pd(pr, pl), vi2);
        const __m256d pxx = _mm256_mul_pd(_mm256_add_pd(_mm256_sub_pd(pr, _mm256_mul_pd(two, pc)), pl), vid2);
        const __m256d L = _mm256_sub_pd(_mm256_sub_pd(_mm256_mul_pd(vD, pxx), _mm256_mul_pd(v, px)),
                                        _mm256_mul_pd(vdecay, pc));
        _mm256_storeu_pd(out + j, _mm256_add_pd(pc, _mm256_mul_pd(vdt, L)));
    }
    for (; j + 1 < n; ++j) {
        const double x = s.x0 + static_cast<double>(j) * s.dx;
        const double v = s.slope * x + s.shift;
        const double px = (p[j + 1] - p[j - 1]) * inv2dx;
        const double pxx = ((p[j + 1] - 2.0 * p[j]) + p[j - 1]) * invdx2;
        const double L = (s.D * pxx - v * px) - s.decay * p[j];
        out[j] = p[j] + s.dt * L;
    }
}

void step2d_avx2(const double* p, double* out, std::size_t nx, std::size_t nb, const Stencil2D& s) {
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
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d vxb0 = _mm256_set1_pd(s.xb0), vdxb = _mm256_set1_pd(s.dxb);
    const __m256d vs12 = _mm256_set1_pd(s.s12), vc1 = _mm256_set1_pd(s.c1);
    const __m256d vs22 = _mm256_set1_pd(s.s22), vc2 = _mm256_set1_pd(s.c2);
    const __m256d vi2x = _mm256_set1_pd(inv2dx), vi2b = _mm256_set1_pd(inv2dxb);
    const __m256d vid2x = _mm256_set1_pd(invdx2), vid2b = _mm256_set1_pd(invdxb2), vi4 = _mm256_set1_pd(inv4);
    const __m256d vD11 = _mm256_set1_pd(s.D11), v2D12 = _mm256_set1_pd(twoD12), vD22 = _mm256_set1_pd(s.D22);
    const __m256d vdecay = _mm256_set1_pd(s.decay), vdt = _mm256_set1_pd(s.dt);
    for (std::size_t i = 1; i + 1 < nx; ++i) {
        const double x = s.x0 + static_cast<double>(i) * s.dx;
        const double* r = p + i * nb;
        const double* up = r + nb;
        const double* dn = r - nb;
        double* o = out + i * nb;
        o[0] = 0.0;
        o[nb - 1] = 0.0;
        const double vxs = s.s11 * x;
        const __m256d vx = _mm256_set1_pd(vxs);
        std::size_t m = 1;
        for (; m + 4 < nb; m += 4) {
            const double md = static_cast<double>(m);
            const __m256d idx = _mm256_set_pd(md + 3.0, md + 2.0, md + 1.0, md);
            const __m256d xb = _mm256_add_pd(vxb0, _mm256_mul_pd(idx, vdxb));
            const __m256d v1 = _mm256_add_pd(_mm256_add_pd(vx, _mm256_mul_pd(vs12, xb)), vc1);
            const __m256d v2 = _mm256_add_pd(_mm256_mul_pd(vs22, xb), vc2);
            const __m256d c = _mm256_loadu_pd(r + m);
            const __m256d rl = _mm256_loadu_pd(r + m - 1), rr = _mm256_loadu_pd(r + m + 1);
            const __m256d uc = _mm256_loadu_pd(up + m), dc = _mm256_loadu_pd(dn + m);
            const __m256d ul = _mm256_loadu_pd(up + m - 1), ur = _mm256_loadu_pd(up + m + 1);
            const __m256d dl = _mm256_loadu_pd(dn + m - 1), dr = _mm256_loadu_pd(dn + m + 1);
            const __m256d px = _mm256_mul_pd(_mm256_sub_pd(uc, dc), vi2x);
            const __m256d pb = _mm256_mul_pd(_mm256_sub_pd(rr, rl), vi2b);
            const __m256d twoc = _mm256_mul_pd(two, c);
            const __m256d pxx = _mm256_mul_pd(_mm256_add_pd(_mm256_sub_pd(uc, twoc), dc), vid2x);
            const __m256d pbb = _mm256_mul_pd(_mm256_add_pd(_mm256_sub_pd(rr, twoc), rl), vid2b);
            const __m256d pxb = _mm256_mul_pd(_mm256_sub_pd(_mm256_sub_pd(ur, ul), _mm256_sub_pd(dr, dl)), vi4);
            const __m256d diff = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(vD11, pxx), _mm256_mul_pd(v2D12, pxb)),
                                               _mm256_mul_pd(vD22, pbb));
            const __m256d adv = _mm256_add_pd(_mm256_mul_pd(v1, px), _mm256_mul_pd(v2, pb));
            const __m256d L = _mm256_sub_pd(_mm256_sub_pd(diff, adv), _mm256_mul_pd(vdecay, c));
            _mm256_storeu_pd(o + m, _mm256_add_pd(c, _mm256_mul_pd(vdt, L)));
        }
        for (; m + 1 < nb; ++m) {
            const double xb = s.xb0 + static_cast<double>(m) * s.dxb;
            const double v1 = (vxs + s.s12 * xb) + s.c1;
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
