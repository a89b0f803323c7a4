#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace papi::par {

// Execution mode of the batch kernels. `parallel` is the engine default:
// OpenMP over fixed-size blocks, block partials combined in index order, so
// the result is bit-identical for any thread count. `serial` is the plain
// reference loop kept for tests and benchmarks; it folds in a different
// order and agrees with `parallel` only up to rounding.
enum class Exec { parallel, serial };

// Block size is part of the numeric contract, independent of thread count.
inline constexpr std::int64_t kBlock = 256;

inline std::int64_t block_count(std::int64_t n) { return (n + kBlock - 1) / kBlock; }

// sum of f(i) for i in [0, n)
template <class F>
double block_sum(std::int64_t n, F&& f) {
    const std::int64_t nb = block_count(n);
    std::vector<double> partial(static_cast<std::size_t>(nb), 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < nb; ++b) {
        const std::int64_t lo = b * kBlock;
        const std::int64_t hi = lo + kBlock < n ? lo + kBlock : n;
        double acc = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) acc += f(i);
        partial[static_cast<std::size_t>(b)] = acc;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

template <class F>
double serial_sum(std::int64_t n, F&& f) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += f(i);
    return acc;
}

// Accumulates dim-length vector contributions: g(i, acc) must add item i
// into acc. Partials are per block, folded in block order.
template <class G>
void block_sum_vec(std::int64_t n, std::int64_t dim, double* out, G&& g) {
    const std::int64_t nb = block_count(n);
    std::vector<double> scratch(static_cast<std::size_t>(nb * dim), 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < nb; ++b) {
        const std::int64_t lo = b * kBlock;
        const std::int64_t hi = lo + kBlock < n ? lo + kBlock : n;
        double* acc = scratch.data() + b * dim;
        for (std::int64_t i = lo; i < hi; ++i) g(i, acc);
    }
    std::memset(out, 0, static_cast<std::size_t>(dim) * sizeof(double));
    for (std::int64_t b = 0; b < nb; ++b) {
        const double* acc = scratch.data() + b * dim;
        for (std::int64_t j = 0; j < dim; ++j) out[j] += acc[j];
    }
}

template <class G>
void serial_sum_vec(std::int64_t n, std::int64_t dim, double* out, G&& g) {
    std::memset(out, 0, static_cast<std::size_t>(dim) * sizeof(double));
    for (std::int64_t i = 0; i < n; ++i) g(i, out);
}

// Integer counts are associative, so a plain OpenMP reduction is already
// deterministic across thread counts.
template <class F>
std::int64_t count_if(std::int64_t n, F&& f) {
    std::int64_t c = 0;
#pragma omp parallel for schedule(static) reduction(+ : c)
    for (std::int64_t i = 0; i < n; ++i)
        if (f(i)) ++c;
    return c;
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#else
    (void)n;
#endif
}

}  // namespace papi::par
