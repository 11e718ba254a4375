#include "vandisc/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vandisc::rng {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

Counter make_counter(Stream stream, std::uint64_t path, std::uint64_t step, std::uint32_t block)
{
    if (step > 0xFFFFFFFFull || block > 0xFFFFFFu)
        throw std::out_of_range("rng counter field overflow");
    return {block | (static_cast<std::uint32_t>(stream) << 24), static_cast<std::uint32_t>(step),
            static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
}

Key make_key(std::uint64_t seed)
{
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo)
{
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace

Counter philox4x32(Counter ctr, Key key)
{
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

void normals(std::uint64_t seed, Stream stream, std::uint64_t path, std::uint64_t step,
             std::span<double> out)
{
    const Key key = make_key(seed);
    for (std::size_t i = 0; i < out.size(); i += 2) {
        const Counter r = philox4x32(make_counter(stream, path, step, static_cast<std::uint32_t>(i / 2)), key);
        // u1 in (0, 1] keeps the logarithm finite.
        const double u1 = 1.0 - to_unit(r[0], r[1]);
        const double u2 = to_unit(r[2], r[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        out[i] = radius * std::cos(angle);
        if (i + 1 < out.size())
            out[i + 1] = radius * std::sin(angle);
    }
}

double uniform(std::uint64_t seed, Stream stream, std::uint64_t path, std::uint64_t step,
               std::uint32_t lane)
{
    const Counter r = philox4x32(make_counter(stream, path, step, lane / 2), make_key(seed));
    return lane % 2 == 0 ? to_unit(r[0], r[1]) : to_unit(r[2], r[3]);
}

double halton(std::uint64_t index, std::uint32_t base)
{
    double result = 0.0;
    double fraction = 1.0 / base;
    while (index > 0) {
        result += fraction * static_cast<double>(index % base);
        index /= base;
        fraction /= base;
    }
    return result;
}

std::uint32_t halton_base(std::size_t dimension)
{
    static constexpr std::uint32_t primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                               41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};
    if (dimension >= std::size(primes))
        throw std::out_of_range("halton dimension too large");
    return primes[dimension];
}

}  // namespace vandisc::rng
