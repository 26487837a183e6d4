#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "balancelab/errors.hpp"
#include "balancelab/matrix.hpp"

namespace balancelab {

struct SvdResult {
    Matrix basis;                        // m x k, orthonormal columns (right singular vectors)
    std::vector<double> singular_values; // k values, non-increasing
};

/// Top-k singular triplets of an n x m matrix via one-sided Jacobi rotations.
/// Works on the columns directly, so no Gram matrix squaring of the
/// conditioning. Deterministic: fixed sweep order, fixed convergence cutoff.
inline SvdResult svd_topk(const Matrix& x, std::size_t k) {
    const std::size_t n = x.rows();
    const std::size_t m = x.cols();
    if (k < 1 || k > std::min(n, m))
        throw UsageError("svd_topk: k must satisfy 1 <= k <= min(rows, cols)");

    Matrix w = x;                  // columns get orthogonalized in place
    Matrix v = Matrix::identity(m);

    const double eps = 1e-15;
    const std::size_t max_sweeps = 60;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    app += wp * wp;
                    aqq += wq * wq;
                    apq += wp * wq;
                }
                if (app == 0.0 || aqq == 0.0) continue;
                if (std::abs(apq) <= eps * std::sqrt(app * aqq)) continue;
                rotated = true;

                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (std::size_t i = 0; i < m; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sigma(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += w(i, j) * w(i, j);
        sigma[j] = std::sqrt(s);
    }

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

    SvdResult out;
    out.basis = Matrix(m, k);
    out.singular_values.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t src = order[j];
        out.singular_values[j] = sigma[src];
        for (std::size_t i = 0; i < m; ++i) out.basis(i, j) = v(i, src);
    }
    return out;
}

} // namespace balancelab
