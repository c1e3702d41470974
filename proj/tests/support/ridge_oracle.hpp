#pragma once

// Ridge regression through the uncentred normal equations with an
// unpenalized intercept column, solved by Gaussian elimination in long double.

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace xmlc::oracle {

struct RidgeSolution {
    std::vector<double> slopes;
    double intercept = 0;
};

inline RidgeSolution normal_equations(std::span<const double> x, std::span<const double> y, std::size_t dim,
                                      double lambda) {
    const std::size_t n = y.size();
    const std::size_t k = dim + 1;  // last column is the intercept
    std::vector<std::vector<long double>> a(k, std::vector<long double>(k + 1, 0.0L));
    auto at = [&](std::size_t r, std::size_t c) -> long double { return c == dim ? 1.0L : x[r * dim + c]; };
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) a[i][j] += at(r, i) * at(r, j);
            a[i][k] += at(r, i) * static_cast<long double>(y[r]);
        }
    }
    for (std::size_t i = 0; i < dim; ++i) a[i][i] += lambda;
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < k; ++r) {
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        }
        if (a[piv][c] == 0) throw std::runtime_error("singular system");
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < k; ++r) {
            if (r == c) continue;
            const long double f = a[r][c] / a[c][c];
            for (std::size_t j = c; j <= k; ++j) a[r][j] -= f * a[c][j];
        }
    }
    RidgeSolution s;
    for (std::size_t i = 0; i < dim; ++i) s.slopes.push_back(static_cast<double>(a[i][k] / a[i][i]));
    s.intercept = static_cast<double>(a[dim][k] / a[dim][dim]);
    return s;
}

}  // namespace xmlc::oracle
