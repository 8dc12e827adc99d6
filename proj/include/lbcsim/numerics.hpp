#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "lbcsim/errors.hpp"

namespace lbcsim {

/// Dense real matrix, row-major. Small-system workhorse: everything in this
/// library is O(10) machines, so no sparsity or blocking.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }

    Matrix transposed() const;
    Matrix operator*(const Matrix& rhs) const;
    Matrix operator+(const Matrix& rhs) const;
    Matrix operator-(const Matrix& rhs) const;
    Matrix scaled(double s) const;

    double max_abs() const;
    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Right-hand side of an ODE: maps (t, x) to dx/dt of the same length.
using StepFunction =
    std::function<std::vector<double>(double, const std::vector<double>&)>;

/// One classical fourth-order Runge-Kutta step of size dt.
/// Throws NumericsError on non-finite derivative entries (names the index)
/// or a derivative length mismatch.
std::vector<double> rk4_step(const StepFunction& f, double t,
                             const std::vector<double>& x, double dt);

/// Eigen-decomposition of a symmetric matrix: S = V diag(values) V^T,
/// values ascending, columns of `vectors` the matching eigenvectors.
struct SymEig {
    std::vector<double> values;
    Matrix vectors;
};

/// Cyclic Jacobi rotations. `tol` bounds both the accepted asymmetry of the
/// input (relative to its magnitude) and the off-diagonal residual at
/// convergence. Asymmetric input is rejected, not silently symmetrized.
SymEig sym_eig(const Matrix& s, double tol = 1e-12);

/// Eigenvalues only, ascending.
std::vector<double> sym_eigenvalues(const Matrix& s, double tol = 1e-12);

/// Numerical rank by Gaussian elimination with partial pivoting on a
/// column-normalized copy, pivots accepted above `tol` (relative scale).
/// Column normalization keeps mixed-magnitude inputs honest: a column's
/// units must not decide whether it counts as independent.
std::size_t matrix_rank(const Matrix& m, double tol = 1e-8);

/// Solve m x = b by LU with partial pivoting.
/// Throws NumericsError naming the failing pivot index when singular.
std::vector<double> solve_linear(Matrix m, std::vector<double> b);

} // namespace lbcsim
