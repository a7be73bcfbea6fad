#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "phibranch/problem.hpp"
#include "phibranch/shoot.hpp"

namespace phibranch {

enum class Termination { LambdaBound, ArclengthBudget, StateBound, DomainExit, StepFailure, ClosedLoop };

std::string to_string(Termination termination);

struct BranchPoint {
    double s = 0.0;
    StartingPoint point;
    double c1norm = 0.0;
    double diam = 0.0;
    double residual = 0.0;             ///< from an independent dense integration
    std::array<double, 3> tangent{};   ///< unit (dlam, dp, dv)/ds
    bool fold = false;                 ///< dlam/ds changed sign on arrival here
};

struct Branch {
    StartingPoint seed;
    std::vector<BranchPoint> points;
    Termination termination = Termination::StepFailure;
    std::string message;
    std::vector<double> folds;          ///< arclengths of fold points
    std::vector<double> fold_lambdas;   ///< lam at those points

    double max_lambda() const;
    double max_gap() const;  ///< largest sup-norm distance between neighbours
};

struct TraceOptions {
    double h0 = 1e-2;
    double hmin = 1e-7;
    double hmax = 0.1;
    double lam_max = 2.0;
    double smax = 50.0;
    double state_bound = 1e3;
    int max_corrector = 8;
    double closed_tol = 1e-6;
    ShootOptions shoot;
    /// Tolerance of the independent re-verification of every point.
    double verify_tol = 1e-12;
};

/// Periodicity residual used for continuation at (lam, p, v).
///
/// Autonomous form: (x(T) - p, x'(T) - v). Lambda-perturbed form:
/// (x(T) - p, int_0^T f dt), which is (y(T) - y(0)) / lam for lam > 0 and
/// stays regular at lam = 0 where every constant is a solution.
struct BranchResidual {
    bool ok = false;
    IntegrateStatus status = IntegrateStatus::Ok;
    std::array<double, 2> r{};
};

BranchResidual branch_residual(const ProblemSpec& spec, double lam, double p, double v,
                               const IntegrateOptions& opts);

/// Pseudo-arclength continuation in (lam, p, v) from the trivial pair
/// (0, p0, 0), where p0 is a simple zero of gamma (autonomous form) or of
/// the average wind w (lambda-perturbed form).
///
/// Predictor steps that would cross lam = 0 land on it instead: back at the
/// seed the branch is closed, elsewhere the tangent is reversed back into
/// lam > 0. Steps past lam_max land on lam_max and end the branch.
/// Throws NumericError (BadSeed) when p0 is not a simple zero or the first
/// step cannot be corrected.
Branch trace(const ProblemSpec& spec, double p0, const TraceOptions& opts = {});

/// Intersections of the branches with the plane lam = level, each refined by
/// Newton at fixed lam and deduplicated (sup norm of (p, v) below dedup_tol).
/// Throws NumericError (Tangential) when level is within 1e-9 of a fold.
std::vector<StartingPoint> branch_crossings(const ProblemSpec& spec, const std::vector<Branch>& branches,
                                            double level, double dedup_tol = 1e-5,
                                            const ShootOptions& opts = {});

std::size_t branch_solution_count(const ProblemSpec& spec, const std::vector<Branch>& branches, double level,
                                  double dedup_tol = 1e-5, const ShootOptions& opts = {});

/// Writes the branch as CSV with columns s, lambda, p, v, c1norm, diam,
/// residual, fold_flag and 17 significant digits.
void write_branch_csv(std::ostream& out, const Branch& branch);

}  // namespace phibranch
