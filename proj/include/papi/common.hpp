#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace papi {

using Vec = std::vector<double>;

// Error hierarchy; the CLI maps any papi::Error to a nonzero exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};
struct ContractError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

// Shortest round-trip decimal form. All persisted numbers go through this so
// emitted files are byte-stable.
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw NumericError("cannot parse number: " + s);
    return v;
}

inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t hash_vec(const Vec& v, std::uint64_t seed = 0xcbf29ce484222325ull) {
    return v.empty() ? seed : fnv1a64(v.data(), v.size() * sizeof(double), seed);
}

// Argmax with the lowest-index tie-break.
inline int argmax_lowest(const Vec& v) {
    if (v.empty()) throw ShapeError("argmax of empty vector");
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

inline void check_finite(const Vec& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in ") + what);
}

}  // namespace papi
