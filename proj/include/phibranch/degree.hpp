#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "phibranch/problem.hpp"

namespace phibranch {

/// A map R^s -> R^s given by a pure evaluator.
struct VectorField {
    std::size_t dim = 1;
    std::function<void(std::span<const double>, std::span<double>)> eval;
    std::string name;

    double operator()(double p) const;
    void operator()(std::span<const double> p, std::span<double> out) const { eval(p, out); }

    static VectorField scalar(std::function<double(double)> fn, std::string name = "F");
};

/// gamma(p) = g(p, 0) and the average wind w, as fields on R^n.
VectorField gamma_field(const ProblemSpec& spec);
VectorField wind_field(const ProblemSpec& spec);

/// The product fields on W x R^n (n = 1):
///   G(p, u)  = (phi0^{-1}(u), g(p, phi0^{-1}(u)))
///   nu(p, u) = ((1/T) int f(t, p, phi0^{-1}(u), 0) dt, phi0^{-1}(u))
VectorField product_gamma_field(const ProblemSpec& spec);
VectorField product_wind_field(const ProblemSpec& spec);

struct DegreeZero {
    std::vector<double> point;
    int sign = 0;       ///< sign of det dF at the zero
    double det = 0.0;   ///< finite-difference Jacobian determinant
};

struct DegreeResult {
    int degree = 0;
    std::vector<DegreeZero> zeros;
    bool admissible = true;
    /// Smallest distance from a zero to the boundary (infinite without zeros).
    double margin = 0.0;
    /// Bounded intervals actually examined after truncating infinite ends.
    std::vector<Interval> scanned;
    std::string evidence;
};

/// Degree of a scalar field on (a, b): (sign F(b) - sign F(a)) / 2.
///
/// Infinite ends are truncated at a scan radius that doubles up to 1e6 until
/// F keeps a constant sign beyond it. Zeros are listed from a 1024-point
/// sign-change scan refined by bisection. Throws NumericError (Inadmissible)
/// when F vanishes at a finite endpoint and (Undetermined) when the sign at
/// infinity cannot be fixed.
DegreeResult degree_1d(const VectorField& field, Interval interval);

/// Degree on a union of intervals: the sum over components. Where a
/// component ends at an isolated zero of F (a removed point such as 0 in
/// R \ {0, 1}) the sign just inside the component is used; the zero set in
/// the open set is still compact, so the degree is defined.
DegreeResult degree_1d(const VectorField& field, const Domain& domain);

struct RegularOptions {
    double dedup_tol = 1e-7;
    double margin = 1e-3;    ///< minimal distance of zeros to the boundary
    double min_det = 1e-8;   ///< smaller |det| is treated as degenerate
    int max_iterations = 60;
};

/// Degree on a bounded box of dimension s <= 3 as the sum of sign det dF
/// over zeros found from an m^s seed grid by Newton's method.
///
/// Throws NumericError (Inadmissible) when a zero lies within margin of the
/// boundary and (Degenerate) when |det| < min_det at a zero. A degenerate
/// field can be replaced by F - q for a small regular value q of the same
/// component of the complement of F(boundary); this is left to the caller.
DegreeResult degree_regular(const VectorField& field, std::span<const Interval> box, std::size_t m,
                            const RegularOptions& opts = {});

struct ReducedDegreeReport {
    std::string reduced_name;   ///< "gamma" or "w"
    std::string product_name;   ///< "G" or "nu"
    int reduced_degree = 0;
    int product_degree = 0;
    bool magnitudes_equal = false;
    double u_range = 0.0;           ///< R of the truncated u-interval (-R, R)
    int inverse_slope_sign = 0;     ///< sign of (phi0^{-1})' at its zero
    DegreeResult reduced;
    DegreeResult product;
};

/// Compares |deg(G, W x R)| with |deg(gamma, W)| (autonomous form) or
/// |deg(nu, W x R)| with |deg(w, W)| (lambda-perturbed form) for n = 1.
/// Infinite ends of W are truncated at the scan radius of degree_1d.
ReducedDegreeReport reduced_degree_check(const ProblemSpec& spec, Interval w_set, std::size_t m = 12);

}  // namespace phibranch
