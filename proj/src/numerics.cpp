#include "lbcsim/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace lbcsim {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw NumericsError(msg);
}

} // namespace

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
    require(cols_ == rhs.rows_, "matrix product dimension mismatch");
    Matrix p(rows_, rhs.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = 0; k < cols_; ++k) {
            const double a = (*this)(i, k);
            if (a == 0.0) continue;
            for (std::size_t j = 0; j < rhs.cols_; ++j) p(i, j) += a * rhs(k, j);
        }
    return p;
}

Matrix Matrix::operator+(const Matrix& rhs) const {
    require(rows_ == rhs.rows_ && cols_ == rhs.cols_, "matrix sum dimension mismatch");
    Matrix s = *this;
    for (std::size_t i = 0; i < s.data_.size(); ++i) s.data_[i] += rhs.data_[i];
    return s;
}

Matrix Matrix::operator-(const Matrix& rhs) const {
    require(rows_ == rhs.rows_ && cols_ == rhs.cols_, "matrix difference dimension mismatch");
    Matrix s = *this;
    for (std::size_t i = 0; i < s.data_.size(); ++i) s.data_[i] -= rhs.data_[i];
    return s;
}

Matrix Matrix::scaled(double s) const {
    Matrix m = *this;
    for (double& v : m.data_) v *= s;
    return m;
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
}

std::vector<double> rk4_step(const StepFunction& f, double t,
                             const std::vector<double>& x, double dt) {
    require(dt > 0.0 && std::isfinite(dt), "rk4 step size must be positive and finite");
    const std::size_t n = x.size();

    auto eval = [&](double tt, const std::vector<double>& xx) {
        std::vector<double> d = f(tt, xx);
        require(d.size() == n, "derivative length " + std::to_string(d.size()) +
                                   " does not match state length " + std::to_string(n));
        for (std::size_t i = 0; i < n; ++i)
            if (!std::isfinite(d[i]))
                throw NumericsError("non-finite derivative at index " + std::to_string(i));
        return d;
    };

    std::vector<double> k1 = eval(t, x);
    std::vector<double> xs(n);

    for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + 0.5 * dt * k1[i];
    std::vector<double> k2 = eval(t + 0.5 * dt, xs);

    for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + 0.5 * dt * k2[i];
    std::vector<double> k3 = eval(t + 0.5 * dt, xs);

    for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + dt * k3[i];
    std::vector<double> k4 = eval(t + dt, xs);

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

SymEig sym_eig(const Matrix& s, double tol) {
    require(s.rows() == s.cols(), "eigensolver requires a square matrix");
    require(!s.empty(), "eigensolver requires a non-empty matrix");
    require(s.all_finite(), "eigensolver input has non-finite entries");
    require(tol > 0.0, "eigensolver tolerance must be positive");

    const std::size_t n = s.rows();
    const double scale = std::max(1.0, s.max_abs());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(s(i, j) - s(j, i)) > tol * scale)
                throw NumericsError("eigensolver input is not symmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");

    Matrix a = s;
    // fold residual asymmetry so rotations see an exactly symmetric matrix
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = m;
            a(j, i) = m;
        }

    Matrix v = Matrix::identity(n);

    double frob = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) frob += a(i, j) * a(i, j);
    frob = std::sqrt(frob);
    const double target = std::max(tol * frob, 1e-300);

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
        if (std::sqrt(off) <= target) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t_rot = (theta >= 0.0 ? 1.0 : -1.0) /
                                     (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t_rot * t_rot + 1.0);
                const double sn = t_rot * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    SymEig out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

std::vector<double> sym_eigenvalues(const Matrix& s, double tol) {
    return sym_eig(s, tol).values;
}

std::size_t matrix_rank(const Matrix& m, double tol) {
    require(tol > 0.0, "rank tolerance must be positive");
    if (m.empty()) return 0;
    require(m.all_finite(), "rank input has non-finite entries");

    Matrix a = m;
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();

    // Two-sided sup-norm equilibration. Diagonal scalings do not change the
    // rank, and alternating row/column passes bring every nonzero row and
    // column max to ~1 even when the input spans hundreds of orders of
    // magnitude in both directions, so the pivot tolerance below is applied
    // to a well-scaled matrix.
    for (int pass = 0; pass < 3; ++pass) {
        for (std::size_t i = 0; i < rows; ++i) {
            double rmax = 0.0;
            for (std::size_t j = 0; j < cols; ++j) rmax = std::max(rmax, std::abs(a(i, j)));
            if (rmax > 0.0)
                for (std::size_t j = 0; j < cols; ++j) a(i, j) /= rmax;
        }
        for (std::size_t j = 0; j < cols; ++j) {
            double cmax = 0.0;
            for (std::size_t i = 0; i < rows; ++i) cmax = std::max(cmax, std::abs(a(i, j)));
            if (cmax > 0.0)
                for (std::size_t i = 0; i < rows; ++i) a(i, j) /= cmax;
        }
    }

    std::size_t rank = 0;
    for (std::size_t col = 0; col < cols && rank < rows; ++col) {
        std::size_t pivot = rank;
        for (std::size_t i = rank + 1; i < rows; ++i)
            if (std::abs(a(i, col)) > std::abs(a(pivot, col))) pivot = i;
        if (std::abs(a(pivot, col)) <= tol) continue;

        if (pivot != rank)
            for (std::size_t j = 0; j < cols; ++j) std::swap(a(pivot, j), a(rank, j));

        const double inv = 1.0 / a(rank, col);
        for (std::size_t i = rank + 1; i < rows; ++i) {
            const double factor = a(i, col) * inv;
            if (factor == 0.0) continue;
            for (std::size_t j = col; j < cols; ++j) a(i, j) -= factor * a(rank, j);
        }
        ++rank;
    }
    return rank;
}

std::vector<double> solve_linear(Matrix m, std::vector<double> b) {
    const std::size_t n = m.rows();
    require(m.cols() == n, "linear solve requires a square matrix");
    require(b.size() == n, "linear solve right-hand side length mismatch");
    require(m.all_finite(), "linear solve input has non-finite entries");
    if (n == 0) return {};

    const double scale = std::max(m.max_abs(), 1e-300);
    const double pivot_tol = 1e-13 * scale;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::abs(m(i, col)) > std::abs(m(pivot, col))) pivot = i;
        if (std::abs(m(pivot, col)) <= pivot_tol)
            throw NumericsError("matrix is singular at pivot " + std::to_string(col));
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(pivot, j), m(col, j));
            std::swap(b[pivot], b[col]);
        }
        const double inv = 1.0 / m(col, col);
        for (std::size_t i = col + 1; i < n; ++i) {
            const double factor = m(i, col) * inv;
            if (factor == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) m(i, j) -= factor * m(col, j);
            b[i] -= factor * b[col];
        }
    }

    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= m(ii, j) * x[j];
        x[ii] = s / m(ii, ii);
    }
    return x;
}

} // namespace lbcsim
