#pragma once

#include <cmath>

namespace phibranch {

namespace detail {

template <class F>
double simpson_step(F& fn, double a, double fa, double m, double fm, double b, double fb, double whole,
                    double tol, int depth, int min_depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = fn(lm);
    const double frm = fn(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth >= 50 || (depth >= min_depth && std::fabs(delta) <= 15.0 * tol))
        return left + right + delta / 15.0;
    return simpson_step(fn, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1, min_depth) +
           simpson_step(fn, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1, min_depth);
}

}  // namespace detail

template <class F>
double adaptive_simpson(F&& fn, double a, double b, double rel_tol, double abs_floor) {
    if (a == b) return 0.0;
    const double fa = fn(a);
    const double fb = fn(b);
    const double m = 0.5 * (a + b);
    const double fm = fn(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Coarse magnitude estimate for the relative tolerance.
    const double scale = std::fabs(b - a) * (std::fabs(fa) + std::fabs(fm) + std::fabs(fb)) / 3.0;
    const double tol = std::fmax(rel_tol * scale, abs_floor);
    // A few forced levels keep periodic integrands from converging falsely
    // on the first three samples.
    return detail::simpson_step(fn, a, fa, m, fm, b, fb, whole, tol, 0, 4);
}

}  // namespace phibranch
