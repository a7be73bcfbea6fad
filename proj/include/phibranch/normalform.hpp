#pragma once

#include <span>
#include <vector>

#include "phibranch/problem.hpp"

namespace phibranch {

/// Point (x, y) of the first-order system, with y = phi(lam, x, x').
struct State {
    std::vector<double> x;
    std::vector<double> y;
};

enum class RhsVariant {
    Direct,         ///< one psi inversion per evaluation
    HadamardSplit,  ///< x' = phi_0^{-1}(y) + lam h(...), verification only
};

/// Right-hand side of the 2n-dimensional system equivalent to the implicit
/// second-order equation at a fixed parameter lam:
///
///     x' = psi(lam, x, y) - lam k(t, x)
///     y' = [g(x, x')] + lam f(t, x, x', lam)
///
/// The flat state layout used by the integrator is [x_1..x_n, y_1..y_n].
class SystemRhs {
public:
    SystemRhs(const ProblemSpec& spec, double lam, RhsVariant variant = RhsVariant::Direct);

    /// Appends n components q with q' = f(t, x, x', lam), so that
    /// y(T) - y(0) = lam q(T) in the lambda-perturbed form.
    SystemRhs with_forcing_integral() const;
    bool accumulates_forcing() const noexcept { return forcing_; }

    const ProblemSpec& spec() const noexcept { return *spec_; }
    double lam() const noexcept { return lam_; }
    RhsVariant variant() const noexcept { return variant_; }
    std::size_t state_dim() const noexcept { return (forcing_ ? 3 : 2) * spec_->dim(); }

    /// Derivative of the flat state; no domain check.
    void operator()(double t, std::span<const double> s, std::span<double> ds) const;

    /// x' recovered from the flat state.
    void velocity(double t, std::span<const double> s, std::span<double> v) const;

    /// Flat state (x, y) whose velocity is v: y = phi(lam, x, v + lam k(t, x)).
    void state_from_velocity(double t, std::span<const double> x, std::span<const double> v,
                             std::span<double> s) const;

private:
    void direct(double t, std::span<const double> s, std::span<double> ds) const;
    void split(double t, std::span<const double> s, std::span<double> ds) const;

    const ProblemSpec* spec_;
    double lam_;
    RhsVariant variant_;
    bool forcing_ = false;
};

/// Derivative (x', y') at state s via the direct form. Throws NumericError
/// (OutsideDomain) when s.x is not in the domain.
State rhs(const SystemRhs& sys, double t, const State& s);

/// Same value as rhs(), computed through the Hadamard decomposition
/// psi = phi_0^{-1}(y) + lam h(lam, x, y).
State rhs_split(const SystemRhs& sys, double t, const State& s);

}  // namespace phibranch
