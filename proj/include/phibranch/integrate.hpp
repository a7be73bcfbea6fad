#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "phibranch/normalform.hpp"

namespace phibranch {

struct IntegrateOptions {
    double tol = 1e-10;           ///< mixed error control: err <= tol * (1 + |state|)
    std::size_t samples = 400;    ///< dense resampling intervals; 0 keeps only the endpoints
    double blowup = 1e8;          ///< abort when any state component exceeds this magnitude
    std::size_t max_steps = 200000;
};

enum class IntegrateStatus { Ok, DomainExit, StepUnderflow, BlowUp, InverseFailure };

std::string to_string(IntegrateStatus status);

/// Solution of the first-order system on [t0, t1].
///
/// times/states/velocities hold samples+1 equally spaced points (only the two
/// endpoints when samples == 0). On failure the vectors hold what was
/// produced before the abort and exit_time marks where it happened.
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;      ///< flat (x, y)
    std::vector<std::vector<double>> velocities;  ///< x' at each sample
    std::size_t steps = 0;
    std::size_t rejected = 0;
    IntegrateStatus status = IntegrateStatus::Ok;
    double exit_time = 0.0;
    std::string message;

    bool ok() const noexcept { return status == IntegrateStatus::Ok; }
    const std::vector<double>& final_state() const { return states.back(); }
};

/// Adaptive Dormand-Prince 5(4) integration from 0 to T with a PI step
/// controller. The integration restarts at the problem's breakpoints and
/// aborts if x leaves its component of the domain.
Trajectory integrate(const SystemRhs& sys, const State& s0, double T, const IntegrateOptions& opts = {});

/// As above on an arbitrary interval; t1 < t0 integrates backwards.
Trajectory integrate_interval(const SystemRhs& sys, std::span<const double> s0, double t0, double t1,
                              const IntegrateOptions& opts = {});

/// Dormand-Prince 5th-order solution with a fixed number of equal steps and
/// no error control. Used for convergence-order checks.
std::vector<double> integrate_fixed(const SystemRhs& sys, std::span<const double> s0, double t0, double t1,
                                    std::size_t steps);

}  // namespace phibranch
