#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "papi/parallel.hpp"
#include "papi/rng.hpp"

using namespace papi;

namespace {

// magnitudes spread over many orders so float addition order matters
std::vector<double> adversarial_values(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.pick(40)));
    return v;
}

}  // namespace

TEST_CASE("block partials are identical for every thread count") {
    const int n = 5000;
    const auto values = adversarial_values(n, 17);
    auto f = [&](std::int64_t i) { return values[static_cast<std::size_t>(i)]; };

    const int saved = par::max_threads();
    par::set_threads(1);
    const double one = par::block_sum(n, f);
    par::set_threads(2);
    const double two = par::block_sum(n, f);
    par::set_threads(7);
    const double seven = par::block_sum(n, f);
    par::set_threads(saved);

    CHECK(one == two);
    CHECK(one == seven);
}

TEST_CASE("block and serial sums agree to rounding") {
    const int n = 4097;
    const auto values = adversarial_values(n, 3);
    auto f = [&](std::int64_t i) { return values[static_cast<std::size_t>(i)]; };
    const double blocked = par::block_sum(n, f);
    const double plain = par::serial_sum(n, f);
    CHECK(blocked == doctest::Approx(plain).epsilon(1e-12));
}

TEST_CASE("single block folds exactly like the serial loop") {
    const int n = static_cast<int>(par::kBlock);
    const auto values = adversarial_values(n, 29);
    auto f = [&](std::int64_t i) { return values[static_cast<std::size_t>(i)]; };
    CHECK(par::block_sum(n, f) == par::serial_sum(n, f));
}

TEST_CASE("vector accumulation is thread-count invariant") {
    const int n = 3000;
    const int dim = 5;
    const auto values = adversarial_values(n * dim, 101);
    auto g = [&](std::int64_t i, double* acc) {
        for (int j = 0; j < dim; ++j) acc[j] += values[static_cast<std::size_t>(i * dim + j)];
    };

    std::vector<double> a(dim, -1.0), b(dim, -1.0), c(dim, -1.0);
    const int saved = par::max_threads();
    par::set_threads(1);
    par::block_sum_vec(n, dim, a.data(), g);
    par::set_threads(5);
    par::block_sum_vec(n, dim, b.data(), g);
    par::set_threads(saved);
    par::serial_sum_vec(n, dim, c.data(), g);

    CHECK(a == b);
    for (int j = 0; j < dim; ++j) CHECK(a[static_cast<std::size_t>(j)] ==
                                        doctest::Approx(c[static_cast<std::size_t>(j)]).epsilon(1e-12));
}

TEST_CASE("count_if matches a serial count") {
    const int n = 10000;
    const auto values = adversarial_values(n, 55);
    auto pred = [&](std::int64_t i) { return values[static_cast<std::size_t>(i)] > 0.0; };
    std::int64_t expect = 0;
    for (int i = 0; i < n; ++i)
        if (pred(i)) ++expect;
    CHECK(par::count_if(n, pred) == expect);

    const int saved = par::max_threads();
    par::set_threads(3);
    CHECK(par::count_if(n, pred) == expect);
    par::set_threads(saved);
}

TEST_CASE("empty ranges sum to zero") {
    auto f = [](std::int64_t) { return 1.0; };
    CHECK(par::block_sum(0, f) == 0.0);
    CHECK(par::serial_sum(0, f) == 0.0);
    double out[2] = {5.0, 5.0};
    par::block_sum_vec(0, 2, out, [](std::int64_t, double*) {});
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
}
