#pragma once

// Ridge regression with an unpenalized intercept, fitted from streamed rows.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace xmlc {

inline constexpr double kDefaultRidgeLambda = 1000.0;

struct RidgeModel {
    std::vector<double> slopes;
    double intercept = 0.0;

    [[nodiscard]] double predict(std::span<const double> x) const;
};

/// Running mean and centred co-moments of (x, y); memory O(dim^2).
class RidgeAccumulator {
public:
    explicit RidgeAccumulator(std::size_t dim);

    void add(std::span<const double> x, double y);

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t rows() const noexcept { return n_; }

    /// Solves (Xc'Xc + lambda I) b = Xc'yc on centred data, intercept from the
    /// means. Throws std::runtime_error, prefixed by `name`, when there are
    /// fewer than dim + 1 rows or the system is not positive definite.
    [[nodiscard]] RidgeModel solve(double lambda, const std::string& name = "ridge") const;

private:
    std::size_t dim_;
    std::size_t n_ = 0;
    std::vector<double> mean_x_;
    double mean_y_ = 0.0;
    std::vector<double> cxx_;  // dim x dim, row-major
    std::vector<double> cxy_;
};

/// Batch fit over row-major `x` with `y.size()` rows.
RidgeModel fit_ridge(std::span<const double> x, std::span<const double> y, std::size_t dim,
                     double lambda = kDefaultRidgeLambda);

}  // namespace xmlc
