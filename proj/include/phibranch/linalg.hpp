#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>

namespace phibranch {

/// Row-major N x N matrix for the tiny systems of shooting and continuation.
template <std::size_t N>
using Matrix = std::array<std::array<double, N>, N>;

template <std::size_t N>
using Vector = std::array<double, N>;

/// Gaussian elimination with partial pivoting. Returns nullopt when a pivot
/// vanishes exactly.
template <std::size_t N>
std::optional<Vector<N>> solve(Matrix<N> a, Vector<N> b) {
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (a[piv][col] == 0.0) return std::nullopt;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < N; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    Vector<N> x{};
    for (std::size_t i = N; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < N; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

template <std::size_t N>
double norm1(const Matrix<N>& a) {
    double best = 0.0;
    for (std::size_t c = 0; c < N; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < N; ++r) s += std::fabs(a[r][c]);
        best = std::fmax(best, s);
    }
    return best;
}

/// 1-norm condition number, computed through the explicit inverse.
/// Infinite for singular matrices.
template <std::size_t N>
double condition_number(const Matrix<N>& a) {
    Matrix<N> inv{};
    for (std::size_t c = 0; c < N; ++c) {
        Vector<N> e{};
        e[c] = 1.0;
        const auto col = solve(a, e);
        if (!col) return INFINITY;
        for (std::size_t r = 0; r < N; ++r) inv[r][c] = (*col)[r];
    }
    return norm1(a) * norm1(inv);
}

template <std::size_t N>
double determinant(Matrix<N> a) {
    double det = 1.0;
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (a[piv][col] == 0.0) return 0.0;
        if (piv != col) {
            std::swap(a[piv], a[col]);
            det = -det;
        }
        det *= a[col][col];
        for (std::size_t r = col + 1; r < N; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
        }
    }
    return det;
}

template <std::size_t N>
double max_norm(const Vector<N>& v) {
    double m = 0.0;
    for (double x : v) m = std::fmax(m, std::fabs(x));
    return m;
}

}  // namespace phibranch
