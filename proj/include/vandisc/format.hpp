#pragma once

#include "vandisc/types.hpp"

#include <sstream>
#include <string>

namespace vandisc {

// Short human-readable point for report witnesses.
inline std::string format_point(const Vec& x)
{
    std::ostringstream out;
    out.precision(6);
    out << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i)
        out << (i ? ", " : "") << x[i];
    out << ')';
    return out.str();
}

}  // namespace vandisc
