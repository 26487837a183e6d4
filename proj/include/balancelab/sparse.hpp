#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "balancelab/errors.hpp"

namespace balancelab {

/// Sparse symmetric matrix stored as upper-triangle coordinates; each stored
/// (i, j, v) with i != j implies the mirrored entry (j, i, v). Duplicate
/// coordinates accumulate.
class SparseSymMatrix {
public:
    explicit SparseSymMatrix(std::size_t n) : n_(n) {}

    std::size_t dimension() const { return n_; }
    std::size_t stored_entries() const { return entries_.size(); }

    void add(std::size_t i, std::size_t j, double value) {
        if (i >= n_ || j >= n_) throw UsageError("SparseSymMatrix::add: index out of range");
        if (value == 0.0) return;
        if (i > j) std::swap(i, j);
        entries_.push_back({i, j, value});
    }

    std::vector<double> multiply(std::span<const double> x) const {
        if (x.size() != n_) throw UsageError("SparseSymMatrix::multiply: vector length mismatch");
        std::vector<double> y(n_, 0.0);
        for (const Entry& e : entries_) {
            y[e.row] += e.value * x[e.col];
            if (e.row != e.col) y[e.col] += e.value * x[e.row];
        }
        return y;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(n_, 0.0);
        for (const Entry& e : entries_)
            if (e.row == e.col) d[e.row] += e.value;
        return d;
    }

    struct Entry {
        std::size_t row, col;
        double value;
    };

    const std::vector<Entry>& entries() const { return entries_; }

private:
    std::size_t n_;
    std::vector<Entry> entries_;
};

/// Conjugate gradient failed to reach the requested relative residual.
class CgError : public NumericalError {
public:
    CgError(double residual, std::size_t iterations)
        : NumericalError("cg_solve: no convergence after " + std::to_string(iterations) +
                         " iterations (relative residual " + std::to_string(residual) + ")"),
          final_residual(residual),
          iterations(iterations) {}

    double final_residual;
    std::size_t iterations;
};

/// Jacobi-preconditioned conjugate gradient for a positive-definite operator.
/// Returns x with ||Ax - b|| / ||b|| <= tol. Zero diagonal entries are left
/// unscaled by the preconditioner; rows that are identically zero stay at
/// zero whenever the matching right-hand side entry is zero.
inline std::vector<double> cg_solve(const SparseSymMatrix& a, std::span<const double> b,
                                    double tol, std::size_t max_iter) {
    const std::size_t n = a.dimension();
    if (b.size() != n) throw UsageError("cg_solve: dimension mismatch between matrix and rhs");
    if (tol <= 0.0) throw UsageError("cg_solve: tolerance must be positive");

    auto dot = [](std::span<const double> u, std::span<const double> v) {
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
        return s;
    };

    const double b_norm = std::sqrt(dot(b, b));
    std::vector<double> x(n, 0.0);
    if (b_norm == 0.0) return x;

    std::vector<double> inv_diag = a.diagonal();
    for (double& d : inv_diag) d = (d > 0.0) ? 1.0 / d : 1.0;

    std::vector<double> r(b.begin(), b.end());
    std::vector<double> z(n), p(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);

    const double target = tol * b_norm;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        if (std::sqrt(dot(r, r)) <= target) {
            // Confirm with the true residual; recurrence drift can flatter us.
            std::vector<double> ax = a.multiply(x);
            double rr = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = b[i] - ax[i];
                rr += d * d;
            }
            if (std::sqrt(rr) <= target) return x;
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
            for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
            p = z;
            rz = dot(r, z);
        }
        std::vector<double> ap = a.multiply(p);
        const double pap = dot(p, ap);
        if (pap <= 0.0)
            throw NumericalError("cg_solve: operator is not positive definite along search direction");
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }

    std::vector<double> ax = a.multiply(x);
    double rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = b[i] - ax[i];
        rr += d * d;
    }
    const double final_rel = std::sqrt(rr) / b_norm;
    if (final_rel <= tol) return x;
    throw CgError(final_rel, max_iter);
}

} // namespace balancelab
