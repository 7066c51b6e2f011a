#ifndef CIDS_COMMON_HPP
#define CIDS_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cids {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.69314718055994530942;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Every component of a posterior product vanished.
struct AllZeroPosterior : Error {
    using Error::Error;
};

/// A gradient or weight became non-finite during training.
struct DivergenceError : Error {
    using Error::Error;
};

struct EpisodeExhausted : Error {
    using Error::Error;
};

struct EnumerationCapExceeded : Error {
    using Error::Error;
};

/// Independent stream for (master seed, i, j, ...). Streams with distinct
/// index tuples are decorrelated through std::seed_seq.
inline Rng make_rng(std::uint64_t seed, std::span<const std::uint64_t> stream) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * stream.size());
    words.push_back(static_cast<std::uint32_t>(seed));
    words.push_back(static_cast<std::uint32_t>(seed >> 32));
    for (auto s : stream) {
        words.push_back(static_cast<std::uint32_t>(s));
        words.push_back(static_cast<std::uint32_t>(s >> 32));
    }
    std::seed_seq seeded(words.begin(), words.end());
    return Rng(seeded);
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
    return make_rng(seed, std::span<const std::uint64_t>(stream.begin(), stream.size()));
}

/// A 64-bit seed drawn from the given stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
    Rng rng = make_rng(seed, stream);
    return rng();
}

/// log(sum(exp(v))) with max shift; -inf for an all -inf input.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
    using Scalar = typename Derived::Scalar;
    if (v.size() == 0)
        return -std::numeric_limits<Scalar>::infinity();
    const Scalar m = v.maxCoeff();
    if (!std::isfinite(m))
        return m;
    return m + std::log((v.array() - m).unaryExpr([](Scalar x) { return std::exp(x); }).sum());
}

/// Shannon entropy in nats with 0 log 0 = 0.
template <typename Derived>
typename Derived::Scalar entropy_nats(const Eigen::MatrixBase<Derived>& p) {
    using Scalar = typename Derived::Scalar;
    Scalar h = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (p[i] > 0)
            h -= p[i] * std::log(p[i]);
    return h;
}

inline double nats_to_bits(double nats) { return nats / kLn2; }

/// log N(x; mean, var)
inline double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
}

} // namespace cids

#endif
