#include "xmlc/ridge.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace xmlc {

double RidgeModel::predict(std::span<const double> x) const {
    if (x.size() != slopes.size()) throw std::invalid_argument("ridge predict: dimension mismatch");
    double s = intercept;
    for (std::size_t i = 0; i < x.size(); ++i) s += slopes[i] * x[i];
    return s;
}

RidgeAccumulator::RidgeAccumulator(std::size_t dim)
    : dim_(dim), mean_x_(dim, 0.0), cxx_(dim * dim, 0.0), cxy_(dim, 0.0) {}

void RidgeAccumulator::add(std::span<const double> x, double y) {
    if (x.size() != dim_) throw std::invalid_argument("ridge: row dimension mismatch");
    ++n_;
    const double inv_n = 1.0 / static_cast<double>(n_);
    std::vector<double> dx(dim_);
    for (std::size_t i = 0; i < dim_; ++i) dx[i] = x[i] - mean_x_[i];
    const double dy = y - mean_y_;
    for (std::size_t i = 0; i < dim_; ++i) mean_x_[i] += dx[i] * inv_n;
    mean_y_ += dy * inv_n;
    // co-moment update: C += dx_old * (v - mean_new)
    for (std::size_t i = 0; i < dim_; ++i) {
        const double ri = x[i] - mean_x_[i];
        double* row = &cxx_[i * dim_];
        for (std::size_t j = 0; j < dim_; ++j) row[j] += dx[j] * ri;
        cxy_[i] += dy * ri;
    }
}

RidgeModel RidgeAccumulator::solve(double lambda, const std::string& name) const {
    if (!(lambda >= 0) || !std::isfinite(lambda)) throw std::invalid_argument(name + ": lambda must be finite and >= 0");
    if (n_ < dim_ + 1) {
        throw std::runtime_error(name + ": degenerate system, " + std::to_string(n_) + " rows for " +
                                 std::to_string(dim_) + " features");
    }
    const auto d = static_cast<Eigen::Index>(dim_);
    Eigen::MatrixXd a(d, d);
    Eigen::VectorXd b(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            // symmetrize the accumulated co-moments
            a(i, j) = 0.5 * (cxx_[static_cast<std::size_t>(i * d + j)] + cxx_[static_cast<std::size_t>(j * d + i)]);
        }
        a(i, i) += lambda;
        b(i) = cxy_[static_cast<std::size_t>(i)];
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw std::runtime_error(name + ": degenerate system");
    const auto diag = ldlt.vectorD();
    const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
    if (d > 0 && diag.minCoeff() <= scale * 1e-14) throw std::runtime_error(name + ": degenerate system");
    const Eigen::VectorXd beta = ldlt.solve(b);
    if (!beta.allFinite()) throw std::runtime_error(name + ": degenerate system");

    RidgeModel out;
    out.slopes.assign(beta.data(), beta.data() + d);
    out.intercept = mean_y_;
    for (std::size_t i = 0; i < dim_; ++i) out.intercept -= out.slopes[i] * mean_x_[i];
    return out;
}

RidgeModel fit_ridge(std::span<const double> x, std::span<const double> y, std::size_t dim, double lambda) {
    if (x.size() != y.size() * dim) throw std::invalid_argument("fit_ridge: shape mismatch");
    RidgeAccumulator acc(dim);
    for (std::size_t r = 0; r < y.size(); ++r) acc.add(x.subspan(r * dim, dim), y[r]);
    return acc.solve(lambda);
}

}  // namespace xmlc
