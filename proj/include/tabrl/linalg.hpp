#pragma once

// Small dense solves. Everything here is O(n^3) with n at most a few
// hundred, so a plain partial-pivoting LU is all we need.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tabrl {

/// Solves A x = b in place of a copy; A is n*n row-major.
inline std::vector<double> lu_solve(std::vector<double> a, std::vector<double> b) {
    const size_t n = b.size();
    if (a.size() != n * n) throw std::invalid_argument("lu_solve: dimension mismatch");
    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;

    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        double best = std::abs(a[perm[col] * n + col]);
        for (size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(a[perm[r] * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0 || !std::isfinite(best))
            throw std::runtime_error("lu_solve: singular matrix");
        std::swap(perm[col], perm[pivot]);
        const size_t prow = perm[col];
        const double d = a[prow * n + col];
        for (size_t r = col + 1; r < n; ++r) {
            const size_t row = perm[r];
            const double f = a[row * n + col] / d;
            if (f == 0.0) continue;
            a[row * n + col] = f;
            for (size_t c = col + 1; c < n; ++c) a[row * n + c] -= f * a[prow * n + c];
            b[row] -= f * b[prow];
        }
    }
    std::vector<double> x(n);
    for (size_t i = n; i-- > 0;) {
        double s = b[perm[i]];
        for (size_t c = i + 1; c < n; ++c) s -= a[perm[i] * n + c] * x[c];
        x[i] = s / a[perm[i] * n + i];
    }
    return x;
}

/// Largest row-wise l1 norm of an nrows*ncols row-major matrix.
inline double max_row_l1(const std::vector<double>& m, size_t nrows, size_t ncols) {
    if (m.size() != nrows * ncols) throw std::invalid_argument("max_row_l1: dimension mismatch");
    double best = 0.0;
    for (size_t r = 0; r < nrows; ++r) {
        double s = 0.0;
        for (size_t c = 0; c < ncols; ++c) s += std::abs(m[r * ncols + c]);
        if (s > best) best = s;
    }
    return best;
}

/// y = x M for a row vector x and nrows*ncols matrix M.
inline std::vector<double> vec_mat(const std::vector<double>& x, const std::vector<double>& m,
                                   size_t nrows, size_t ncols) {
    std::vector<double> y(ncols, 0.0);
    for (size_t r = 0; r < nrows; ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        for (size_t c = 0; c < ncols; ++c) y[c] += xr * m[r * ncols + c];
    }
    return y;
}

/// C = A B with A nrows*k, B k*ncols.
inline std::vector<double> mat_mat(const std::vector<double>& a, const std::vector<double>& b,
                                   size_t nrows, size_t k, size_t ncols) {
    std::vector<double> c(nrows * ncols, 0.0);
    for (size_t r = 0; r < nrows; ++r)
        for (size_t j = 0; j < k; ++j) {
            const double arj = a[r * k + j];
            if (arj == 0.0) continue;
            for (size_t col = 0; col < ncols; ++col) c[r * ncols + col] += arj * b[j * ncols + col];
        }
    return c;
}

} // namespace tabrl
