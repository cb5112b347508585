#pragma once

#include <cmath>

#include "ipdc/rng.hpp"
#include "ipdc/types.hpp"

namespace testing {

inline ipdc::Matrix random_normal(ipdc::Index rows, ipdc::Index cols, ipdc::RngStream& rng)
{
    ipdc::Matrix m(rows, cols);
    for (ipdc::Index j = 0; j < cols; ++j)
        for (ipdc::Index i = 0; i < rows; ++i)
            m(i, j) = rng.normal();
    return m;
}

inline double rel_err(double a, double b)
{
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

} // namespace testing
