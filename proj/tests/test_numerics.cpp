#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lbcsim/numerics.hpp"

using namespace lbcsim;

namespace {

// integrate x_dot = f over [0, t_end] with fixed steps
std::vector<double> integrate(const StepFunction& f, std::vector<double> x,
                              double t_end, double dt) {
    const long steps = std::lround(t_end / dt);
    for (long k = 0; k < steps; ++k)
        x = rk4_step(f, static_cast<double>(k) * dt, x, dt);
    return x;
}

Matrix random_symmetric(std::size_t n, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = u(rng);
            s(i, j) = v;
            s(j, i) = v;
        }
    return s;
}

// rank oracle by construction: A = U * V with U (n x r), V (r x n) generic
Matrix known_rank_matrix(std::size_t n, std::size_t r, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.5, 1.5);
    Matrix left(n, r), right(r, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < r; ++j) left(i, j) = u(rng) * (i == j % n ? 2.0 : 1.0);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < n; ++j) right(i, j) = u(rng) - 2.0 * u(rng);
    return left * right;
}

} // namespace

TEST_CASE("rk4 reproduces exponential decay to integrator accuracy") {
    const StepFunction decay = [](double, const std::vector<double>& x) {
        return std::vector<double>{-x[0]};
    };
    const std::vector<double> x1 = integrate(decay, {1.0}, 1.0, 1e-3);
    CHECK(std::abs(x1[0] - std::exp(-1.0)) < 1e-9);
}

TEST_CASE("rk4 error shrinks 16x when the step is halved") {
    const StepFunction decay = [](double, const std::vector<double>& x) {
        return std::vector<double>{-x[0]};
    };
    const double exact = std::exp(-1.0);
    const double err_coarse = std::abs(integrate(decay, {1.0}, 1.0, 0.01)[0] - exact);
    const double err_fine = std::abs(integrate(decay, {1.0}, 1.0, 0.005)[0] - exact);
    const double ratio = err_coarse / err_fine;
    CHECK(ratio > 12.8);
    CHECK(ratio < 19.2);
}

TEST_CASE("rk4 tracks a harmonic oscillator quarter period") {
    const StepFunction osc = [](double, const std::vector<double>& x) {
        return std::vector<double>{x[1], -x[0]};
    };
    const double quarter = std::acos(-1.0) / 2.0;
    const std::vector<double> x = integrate(osc, {1.0, 0.0}, quarter, quarter / 2000.0);
    CHECK(std::abs(x[0]) < 1e-9);
    CHECK(std::abs(x[1] + 1.0) < 1e-9);
}

TEST_CASE("rk4 rejects non-finite derivatives naming the entry") {
    const StepFunction bad = [](double, const std::vector<double>& x) {
        return std::vector<double>{x[0], std::nan("")};
    };
    CHECK_THROWS_WITH_AS(rk4_step(bad, 0.0, {1.0, 1.0}, 0.1),
                         doctest::Contains("index 1"), NumericsError);
}

TEST_CASE("rk4 rejects derivative length mismatches and bad steps") {
    const StepFunction short_f = [](double, const std::vector<double>&) {
        return std::vector<double>{1.0};
    };
    CHECK_THROWS_AS(rk4_step(short_f, 0.0, {1.0, 2.0}, 0.1), NumericsError);
    const StepFunction ok = [](double, const std::vector<double>& x) { return x; };
    CHECK_THROWS_AS(rk4_step(ok, 0.0, {1.0}, 0.0), NumericsError);
    CHECK_THROWS_AS(rk4_step(ok, 0.0, {1.0}, -1.0), NumericsError);
}

TEST_CASE("eigensolver matches the closed-form 2x2 answers") {
    // eigenvalues of [[a,b],[b,d]] are (a+d)/2 +- sqrt(((a-d)/2)^2 + b^2)
    Matrix s(2, 2);
    s(0, 0) = -600.0;
    s(0, 1) = s(1, 0) = 100.0;
    s(1, 1) = -60.0;
    const std::vector<double> ev = sym_eigenvalues(s);
    const double mid = -330.0, rad = std::sqrt(270.0 * 270.0 + 100.0 * 100.0);
    CHECK(ev[0] == doctest::Approx(mid - rad).epsilon(1e-12));
    CHECK(ev[1] == doctest::Approx(mid + rad).epsilon(1e-12));

    Matrix s2(2, 2);
    s2(0, 0) = -20.0;
    s2(0, 1) = s2(1, 0) = 5.0;
    s2(1, 1) = -10.0;
    const std::vector<double> ev2 = sym_eigenvalues(s2);
    const double rad2 = std::sqrt(25.0 + 25.0);
    CHECK(ev2[0] == doctest::Approx(-15.0 - rad2).epsilon(1e-12));
    CHECK(ev2[1] == doctest::Approx(-15.0 + rad2).epsilon(1e-12));
}

TEST_CASE("eigensolver reconstructs random symmetric matrices") {
    std::mt19937 rng(20240817);
    for (const std::size_t n : {2u, 5u, 8u, 13u}) {
        const Matrix s = random_symmetric(n, rng);
        const SymEig e = sym_eig(s);

        REQUIRE(e.values.size() == n);
        for (std::size_t k = 1; k < n; ++k) CHECK(e.values[k - 1] <= e.values[k]);

        // V diag(values) V^T must reproduce the input
        Matrix lam(n, n);
        for (std::size_t k = 0; k < n; ++k) lam(k, k) = e.values[k];
        const Matrix rebuilt = e.vectors * lam * e.vectors.transposed();
        CHECK((rebuilt - s).max_abs() < 1e-8);

        // orthonormal eigenvector basis
        const Matrix gram = e.vectors.transposed() * e.vectors;
        CHECK((gram - Matrix::identity(n)).max_abs() < 1e-10);
    }
}

TEST_CASE("eigensolver rejects asymmetric input") {
    Matrix s(2, 2);
    s(0, 0) = 1.0;
    s(0, 1) = 2.0;
    s(1, 0) = 2.1;
    s(1, 1) = 3.0;
    CHECK_THROWS_AS(sym_eig(s), NumericsError);

    Matrix r(2, 3);
    CHECK_THROWS_AS(sym_eig(r), NumericsError);
}

TEST_CASE("rank agrees with construction over factor products") {
    std::mt19937 rng(987123);
    for (const std::size_t n : {3u, 5u, 7u}) {
        for (std::size_t r = 1; r <= n; ++r) {
            const Matrix a = known_rank_matrix(n, r, rng);
            CHECK(matrix_rank(a) == r);
        }
    }
    CHECK(matrix_rank(Matrix::identity(6)) == 6);
    CHECK(matrix_rank(Matrix(4, 4)) == 0);
}

TEST_CASE("rank is invariant under extreme row and column scaling") {
    std::mt19937 rng(4242);
    const Matrix a = known_rank_matrix(6, 4, rng);

    Matrix rows = a;
    for (std::size_t j = 0; j < 6; ++j) {
        rows(0, j) *= 1e9;
        rows(3, j) *= 1e-9;
    }
    CHECK(matrix_rank(rows) == 4);

    // columns spanning ~300^17 in magnitude, the controllability regime
    Matrix cols = a;
    double s = 1.0;
    for (std::size_t j = 0; j < 6; ++j) {
        for (std::size_t i = 0; i < 6; ++i) cols(i, j) *= s;
        s *= 300.0 * 300.0 * 300.0;
    }
    CHECK(matrix_rank(cols) == 4);
}

TEST_CASE("linear solver inverts a known system and flags singular input") {
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = 7;
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
        a(i, i) += 3.0; // keep it comfortably nonsingular
    }
    std::vector<double> x_true(n);
    for (std::size_t i = 0; i < n; ++i) x_true[i] = u(rng);

    std::vector<double> b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) b[i] += a(i, j) * x_true[j];

    const std::vector<double> x = solve_linear(a, b);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(x[i] == doctest::Approx(x_true[i]).epsilon(1e-10));

    Matrix sing(2, 2);
    sing(0, 0) = 1.0;
    sing(0, 1) = 2.0;
    sing(1, 0) = 2.0;
    sing(1, 1) = 4.0;
    CHECK_THROWS_WITH_AS(solve_linear(sing, {1.0, 1.0}), doctest::Contains("pivot"),
                         NumericsError);
}
