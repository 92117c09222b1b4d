#include <doctest.h>

#include <cstring>
#include <random>
#include <vector>

#include "riskmfg/stencil.hpp"

using namespace riskmfg;

namespace {

std::vector<double> random_field(std::size_t n, unsigned seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = U(g);
    return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("stencil") {

TEST_CASE("isa selection") {
    CHECK(isa_available(Isa::scalar));
    CHECK(isa_available(best_isa()));
    CHECK(to_string(Isa::scalar) == "scalar");
    CHECK(to_string(Isa::avx2) == "avx2");
}

TEST_CASE("scalar 1D step on a linear profile") {
    // p = x on [0, 1]: p_x = 1, p_xx = 0.
    const std::size_t n = 11;
    std::vector<double> p(n), out(n);
    for (std::size_t j = 0; j < n; ++j) p[j] = 0.1 * j;
    const Stencil1D s{0.0, 0.1, 0.01, 0.5, 2.0, 1.0, 0.3};
    kernels::step1d_scalar(p.data(), out.data(), n, s);
    CHECK(out[0] == 0.0);
    CHECK(out[n - 1] == 0.0);
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double x = 0.1 * j;
        CHECK(out[j] == doctest::Approx(x + 0.01 * (-0.5 * x - (2.0 * x + 1.0))));
    }
}

TEST_CASE("sum_min lanes") {
    const std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6, 5};
    const auto r = kernels::sum_min_scalar(v.data(), v.size());
    CHECK(r.sum == 36.0);
    CHECK(r.min == 1.0);
}

#if defined(RISKMFG_HAVE_AVX2)
TEST_CASE("avx2 kernels match scalar bit for bit") {
    if (!isa_available(Isa::avx2)) return;
    for (std::size_t n : {8u, 9u, 10u, 11u, 64u, 1001u}) {
        const auto p = random_field(n, static_cast<unsigned>(n));
        std::vector<double> a(n), b(n);
        const Stencil1D s{-0.7, 0.0025, 3e-5, -1.3, 2.1, -0.4, 0.045};
        kernels::step1d_scalar(p.data(), a.data(), n, s);
        kernels::step1d_avx2(p.data(), b.data(), n, s);
        CHECK(same_bits(a, b));
        const auto r1 = kernels::sum_min_scalar(p.data(), n), r2 = kernels::sum_min_avx2(p.data(), n);
        CHECK(std::memcmp(&r1.sum, &r2.sum, sizeof(double)) == 0);
        CHECK(std::memcmp(&r1.min, &r2.min, sizeof(double)) == 0);
    }
    for (auto [nx, nb] : {std::pair<std::size_t, std::size_t>{8, 8}, {13, 9}, {40, 37}, {101, 64}}) {
        const auto p = random_field(nx * nb, static_cast<unsigned>(nx * 131 + nb));
        std::vector<double> a(nx * nb), b(nx * nb);
        const Stencil2D s{-0.7, 0.01, -2.0, 0.05, 1e-5, 0.3, -4.2, 3.1, 0.9, -0.2, 1.0, 0.045, 0.0072, 0.0072};
        kernels::step2d_scalar(p.data(), a.data(), nx, nb, s);
        kernels::step2d_avx2(p.data(), b.data(), nx, nb, s);
        CHECK(same_bits(a, b));
    }
    std::vector<double> neg{1.0, -0.0, 0.0, 2.0, -3e-300, 5.0};
    const auto r1 = kernels::sum_min_scalar(neg.data(), neg.size()), r2 = kernels::sum_min_avx2(neg.data(), neg.size());
    CHECK(std::memcmp(&r1.min, &r2.min, sizeof(double)) == 0);
}
#endif

TEST_CASE("dispatch falls back to scalar") {
    const std::size_t n = 33;
    const auto p = random_field(n, 1);
    std::vector<double> a(n), b(n);
    const Stencil1D s{0.0, 0.1, 1e-3, 0.0, 0.0, 1.0, 0.1};
    step1d(p.data(), a.data(), n, s, Isa::scalar);
    step1d(p.data(), b.data(), n, s, best_isa());
    CHECK(same_bits(a, b));
}

}
