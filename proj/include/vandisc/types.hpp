#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>

namespace vandisc {

// State, noise and control vectors never exceed this dimension, so the
// Eigen types below live on the stack.
inline constexpr int kMaxDim = 3;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

inline std::span<const double> as_span(const Vec& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

inline Vec vec_of(std::initializer_list<double> values)
{
    Vec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double value : values)
        v[i++] = value;
    return v;
}

}  // namespace vandisc
