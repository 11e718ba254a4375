#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace vandisc::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds (Salmon et al. 2011). Stateless: every draw is a
// pure function of (counter, key).
Counter philox4x32(Counter ctr, Key key);

// Logical streams keep independent uses of one seed apart.
enum class Stream : std::uint32_t {
    brownian = 0,
    switching = 1,
    gamma = 2,
    sampling = 3,
    terminal = 4,
};

// Standard normals for (seed, stream, path, step), Box-Muller on Philox words.
void normals(std::uint64_t seed, Stream stream, std::uint64_t path, std::uint64_t step,
             std::span<double> out);

// Uniform on [0, 1) with 53 random bits.
double uniform(std::uint64_t seed, Stream stream, std::uint64_t path, std::uint64_t step,
               std::uint32_t lane = 0);

// Radical inverse of index in the given prime base (Halton coordinate).
double halton(std::uint64_t index, std::uint32_t base);

// The first kMaxHaltonDims primes used as Halton bases.
std::uint32_t halton_base(std::size_t dimension);

}  // namespace vandisc::rng
