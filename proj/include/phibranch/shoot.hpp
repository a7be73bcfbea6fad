#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "phibranch/integrate.hpp"
#include "phibranch/problem.hpp"

namespace phibranch {

/// How the C^1 norm of an orbit is formed from max|x| and max|x'|.
enum class C1Norm { Sum, Max };

struct ShootOptions {
    IntegrateOptions integration{1e-10, 0, 1e8, 200000};
    double accept_tol = 1e-8;     ///< residual bound for a reported orbit
    double newton_tol = 1e-10;    ///< |R| <= newton_tol * (1 + |z|)
    int max_iterations = 25;
    int max_halvings = 8;
    double max_condition = 1e12;
    double dedup_tol = 1e-5;
    std::size_t dense_samples = 400;
    C1Norm c1norm = C1Norm::Sum;
};

/// Result of integrating one period from (p, v).
struct PeriodMapResult {
    bool escaped = false;
    IntegrateStatus status = IntegrateStatus::Ok;
    double p_T = 0.0;
    double v_T = 0.0;
    double exit_time = 0.0;
    std::string message;
};

/// (x(T), x'(T)) for the solution with x(0) = p, x'(0) = v at parameter lam.
/// Escapes (domain exit, blow-up, step underflow) are reported, not thrown.
PeriodMapResult period_map(const ProblemSpec& spec, double lam, double p, double v,
                           const IntegrateOptions& opts = ShootOptions{}.integration);

struct OrbitMetrics {
    double c1norm = 0.0;
    double diam = 0.0;
};

/// A verified T-periodic solution with its starting point.
struct PeriodicOrbit {
    StartingPoint start;
    Trajectory trajectory;
    double residual = 0.0;  ///< sup norm of (x(T) - p, x'(T) - v)
    double c1norm = 0.0;
    double diam = 0.0;
    int iterations = 0;
};

/// diam = max over sample pairs of the phase-plane distance; c1norm from
/// max|x| and max|x'|.
OrbitMetrics metrics(const Trajectory& traj, C1Norm mode = C1Norm::Sum);

/// Integrates one period with dense output and measures residual and
/// metrics. Returns nullopt when the solution escapes.
std::optional<PeriodicOrbit> verify_orbit(const ProblemSpec& spec, double lam, double p, double v,
                                          const ShootOptions& opts = {});

enum class NewtonFailure { None, MaxIterations, Singular, Escape };

std::string to_string(NewtonFailure failure);

struct NewtonResult {
    std::optional<PeriodicOrbit> orbit;
    NewtonFailure failure = NewtonFailure::None;
    int iterations = 0;
    double residual = 0.0;
    double p = 0.0;  ///< last iterate
    double v = 0.0;

    bool converged() const noexcept { return orbit.has_value(); }
};

/// Damped Newton on R(p, v) = period_map(p, v) - (p, v) with a central
/// difference Jacobian. The damping factor halves whenever a trial step
/// increases |R| or escapes.
NewtonResult newton_periodic(const ProblemSpec& spec, double lam, double p, double v, const ShootOptions& opts = {});

/// Closed (p, v) rectangle.
struct Box {
    double p_lo = 0.0;
    double p_hi = 0.0;
    double v_lo = 0.0;
    double v_hi = 0.0;

    bool contains(double p, double v, double slack = 0.0) const noexcept {
        return p >= p_lo - slack && p <= p_hi + slack && v >= v_lo - slack && v <= v_hi + slack;
    }
};

struct GridScanReport {
    std::vector<PeriodicOrbit> orbits;  ///< distinct, sorted by p
    std::size_t seeds = 0;
    std::size_t converged = 0;
    std::size_t failed = 0;
    std::size_t outside_box = 0;
};

/// Newton from every node of an m x m grid over box; converged orbits whose
/// starting point lies in the box are deduplicated (sup-norm distance of
/// (p, v) below dedup_tol) and returned sorted by p.
GridScanReport grid_scan(const ProblemSpec& spec, double lam, const Box& box, std::size_t m,
                         const ShootOptions& opts = {});

/// Merges starting points closer than tol (sup norm of (p, v)); keeps the
/// first of each cluster after sorting lexicographically.
std::vector<PeriodicOrbit> dedup_orbits(std::vector<PeriodicOrbit> orbits, double tol);

}  // namespace phibranch
