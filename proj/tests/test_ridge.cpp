#include <doctest.h>

#include <cmath>
#include <numeric>

#include "support/ridge_oracle.hpp"
#include "xmlc/random.hpp"
#include "xmlc/ridge.hpp"

using namespace xmlc;

namespace {

struct System {
    std::vector<double> x;
    std::vector<double> y;
    std::size_t dim;
};

System random_system(Rng& rng, std::size_t rows, std::size_t dim, double noise) {
    System s{{}, {}, dim};
    std::vector<double> beta(dim);
    for (auto& b : beta) b = standard_normal(rng);
    for (std::size_t r = 0; r < rows; ++r) {
        double t = 2.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double v = standard_normal(rng);
            s.x.push_back(v);
            t += beta[j] * v;
        }
        s.y.push_back(t + noise * standard_normal(rng));
    }
    return s;
}

}  // namespace

TEST_CASE("matches the normal equations") {
    Rng rng(61);
    for (double lambda : {1e-9, 1.0, 1000.0}) {
        const auto s = random_system(rng, 60, 5, 0.3);
        const auto got = fit_ridge(s.x, s.y, s.dim, lambda);
        const auto want = oracle::normal_equations(s.x, s.y, s.dim, lambda);
        for (std::size_t j = 0; j < s.dim; ++j) CHECK(got.slopes[j] == doctest::Approx(want.slopes[j]).epsilon(1e-9));
        CHECK(got.intercept == doctest::Approx(want.intercept).epsilon(1e-9));
    }
}

TEST_CASE("huge penalty leaves the mean") {
    Rng rng(62);
    const auto s = random_system(rng, 100, 4, 1.0);
    const auto m = fit_ridge(s.x, s.y, s.dim, 1e12);
    const double mean = std::accumulate(s.y.begin(), s.y.end(), 0.0) / static_cast<double>(s.y.size());
    for (double b : m.slopes) CHECK(std::abs(b) < 1e-8);
    CHECK(m.intercept == doctest::Approx(mean).epsilon(1e-6));
}

TEST_CASE("tiny penalty recovers an exact fit") {
    Rng rng(63);
    const auto s = random_system(rng, 50, 3, 0.0);
    const auto m = fit_ridge(s.x, s.y, s.dim, 1e-9);
    for (std::size_t r = 0; r < s.y.size(); ++r) {
        CHECK(m.predict(std::span<const double>(s.x).subspan(r * 3, 3)) == doctest::Approx(s.y[r]).epsilon(1e-8));
    }
}

TEST_CASE("streamed and batch fits agree") {
    Rng rng(64);
    const auto s = random_system(rng, 80, 6, 0.5);
    RidgeAccumulator acc(6);
    for (std::size_t r = 0; r < 80; ++r) acc.add(std::span<const double>(s.x).subspan(r * 6, 6), s.y[r]);
    CHECK(acc.rows() == 80);
    const auto a = acc.solve(kDefaultRidgeLambda);
    const auto b = fit_ridge(s.x, s.y, 6);
    CHECK(a.slopes == b.slopes);
    CHECK(a.intercept == b.intercept);
}

TEST_CASE("degenerate systems name the regressor") {
    RidgeAccumulator acc(3);
    acc.add(std::vector<double>{1, 2, 3}, 1);
    try {
        (void)acc.solve(1.0, "classifier 4");
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("classifier 4") == 0);
    }
    RidgeAccumulator flat(2);
    for (int i = 0; i < 10; ++i) flat.add(std::vector<double>{1, 1}, i);
    CHECK_THROWS_AS((void)flat.solve(0.0, "flat"), std::runtime_error);
}
