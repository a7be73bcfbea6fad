#include "phibranch/shoot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "phibranch/linalg.hpp"
#include "phibranch/parallel.hpp"

namespace phibranch {

namespace {

constexpr double kSqrtEps = 1.4901161193847656e-08;

struct Residual {
    bool escaped = false;
    Vector<2> r{};
};

Residual periodicity_residual(const ProblemSpec& spec, double lam, const Vector<2>& z, const IntegrateOptions& opts) {
    const PeriodMapResult pm = period_map(spec, lam, z[0], z[1], opts);
    if (pm.escaped) return {true, {}};
    return {false, {pm.p_T - z[0], pm.v_T - z[1]}};
}

}  // namespace

PeriodMapResult period_map(const ProblemSpec& spec, double lam, double p, double v, const IntegrateOptions& opts) {
    if (spec.dim() != 1)
        throw NumericError(NumericError::Kind::Unsupported, "shooting is implemented for scalar problems (n = 1)");
    PeriodMapResult out;
    if (!spec.domain().contains(p)) {
        out.escaped = true;
        out.status = IntegrateStatus::DomainExit;
        out.message = "starting position outside the domain";
        return out;
    }
    const SystemRhs sys(spec, lam);
    std::array<double, 2> s0{};
    try {
        sys.state_from_velocity(0.0, {&p, 1}, {&v, 1}, s0);
    } catch (const NumericError& e) {
        out.escaped = true;
        out.status = IntegrateStatus::InverseFailure;
        out.message = e.what();
        return out;
    }
    if (!std::isfinite(s0[1])) {
        out.escaped = true;
        out.status = IntegrateStatus::BlowUp;
        out.message = "non-finite initial y";
        return out;
    }
    IntegrateOptions o = opts;
    o.samples = 0;
    const Trajectory traj = integrate_interval(sys, s0, 0.0, spec.period(), o);
    out.status = traj.status;
    out.exit_time = traj.exit_time;
    if (!traj.ok()) {
        out.escaped = true;
        out.message = traj.message;
        return out;
    }
    out.p_T = traj.final_state()[0];
    out.v_T = traj.velocities.back()[0];
    return out;
}

OrbitMetrics metrics(const Trajectory& traj, C1Norm mode) {
    const std::size_t count = traj.states.size();
    double max_x = 0.0, max_v = 0.0, diam2 = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double xi = traj.states[i][0];
        const double vi = traj.velocities[i][0];
        max_x = std::max(max_x, std::fabs(xi));
        max_v = std::max(max_v, std::fabs(vi));
        for (std::size_t j = i + 1; j < count; ++j) {
            const double dx = xi - traj.states[j][0];
            const double dv = vi - traj.velocities[j][0];
            diam2 = std::max(diam2, dx * dx + dv * dv);
        }
    }
    return {mode == C1Norm::Sum ? max_x + max_v : std::max(max_x, max_v), std::sqrt(diam2)};
}

std::optional<PeriodicOrbit> verify_orbit(const ProblemSpec& spec, double lam, double p, double v,
                                          const ShootOptions& opts) {
    if (spec.dim() != 1)
        throw NumericError(NumericError::Kind::Unsupported, "shooting is implemented for scalar problems (n = 1)");
    if (!spec.domain().contains(p)) return std::nullopt;
    const SystemRhs sys(spec, lam);
    std::array<double, 2> s0{};
    try {
        sys.state_from_velocity(0.0, {&p, 1}, {&v, 1}, s0);
    } catch (const NumericError&) {
        return std::nullopt;
    }
    IntegrateOptions o = opts.integration;
    o.samples = opts.dense_samples;
    PeriodicOrbit orbit;
    orbit.trajectory = integrate_interval(sys, s0, 0.0, spec.period(), o);
    if (!orbit.trajectory.ok()) return std::nullopt;
    orbit.start = {lam, p, v};
    const double xT = orbit.trajectory.final_state()[0];
    const double vT = orbit.trajectory.velocities.back()[0];
    orbit.residual = std::max(std::fabs(xT - p), std::fabs(vT - v));
    const OrbitMetrics m = metrics(orbit.trajectory, opts.c1norm);
    orbit.c1norm = m.c1norm;
    orbit.diam = m.diam;
    return orbit;
}

std::string to_string(NewtonFailure failure) {
    switch (failure) {
        case NewtonFailure::None: return "none";
        case NewtonFailure::MaxIterations: return "max-iterations";
        case NewtonFailure::Singular: return "singular-jacobian";
        case NewtonFailure::Escape: return "escape";
    }
    return "unknown";
}

NewtonResult newton_periodic(const ProblemSpec& spec, double lam, double p, double v, const ShootOptions& opts) {
    NewtonResult out;
    Vector<2> z{p, v};
    out.p = p;
    out.v = v;
    Residual res = periodicity_residual(spec, lam, z, opts.integration);
    if (res.escaped) {
        out.failure = NewtonFailure::Escape;
        return out;
    }
    for (int it = 0;; ++it) {
        out.iterations = it;
        out.residual = max_norm(res.r);
        out.p = z[0];
        out.v = z[1];
        if (out.residual <= opts.newton_tol * (1.0 + max_norm(z))) break;
        if (it >= opts.max_iterations) {
            out.failure = NewtonFailure::MaxIterations;
            return out;
        }
        Matrix<2> jac{};
        for (std::size_t j = 0; j < 2; ++j) {
            const double h = kSqrtEps * (1.0 + std::fabs(z[j]));
            Vector<2> zp = z, zm = z;
            zp[j] += h;
            zm[j] -= h;
            const Residual rp = periodicity_residual(spec, lam, zp, opts.integration);
            const Residual rm = periodicity_residual(spec, lam, zm, opts.integration);
            if (rp.escaped || rm.escaped) {
                out.failure = NewtonFailure::Escape;
                return out;
            }
            for (std::size_t i = 0; i < 2; ++i) jac[i][j] = (rp.r[i] - rm.r[i]) / (2.0 * h);
        }
        if (!(condition_number(jac) <= opts.max_condition)) {
            out.failure = NewtonFailure::Singular;
            return out;
        }
        const auto step = solve(jac, Vector<2>{-res.r[0], -res.r[1]});
        if (!step) {
            out.failure = NewtonFailure::Singular;
            return out;
        }
        double damping = 1.0;
        bool accepted = false;
        Vector<2> z_try{};
        Residual r_try;
        for (int halving = 0; halving <= opts.max_halvings; ++halving) {
            z_try = {z[0] + damping * (*step)[0], z[1] + damping * (*step)[1]};
            r_try = periodicity_residual(spec, lam, z_try, opts.integration);
            if (!r_try.escaped && max_norm(r_try.r) < max_norm(res.r)) {
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        if (!accepted) {
            // No decrease along the Newton direction: keep the last
            // non-escaping trial so a noisy residual floor cannot stall us.
            if (r_try.escaped) {
                out.failure = NewtonFailure::Escape;
                return out;
            }
        }
        z = z_try;
        res = r_try;
    }
    auto orbit = verify_orbit(spec, lam, z[0], z[1], opts);
    if (!orbit) {
        out.failure = NewtonFailure::Escape;
        return out;
    }
    orbit->iterations = out.iterations;
    out.orbit = std::move(orbit);
    return out;
}

std::vector<PeriodicOrbit> dedup_orbits(std::vector<PeriodicOrbit> orbits, double tol) {
    std::sort(orbits.begin(), orbits.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
        if (a.start.p != b.start.p) return a.start.p < b.start.p;
        return a.start.v < b.start.v;
    });
    std::vector<PeriodicOrbit> kept;
    for (auto& o : orbits) {
        const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const PeriodicOrbit& k) {
            return std::max(std::fabs(k.start.p - o.start.p), std::fabs(k.start.v - o.start.v)) < tol;
        });
        if (!duplicate) kept.push_back(std::move(o));
    }
    return kept;
}

GridScanReport grid_scan(const ProblemSpec& spec, double lam, const Box& box, std::size_t m, const ShootOptions& opts) {
    if (m < 2) throw NumericError(NumericError::Kind::Unsupported, "grid_scan needs m >= 2");
    GridScanReport report;
    report.seeds = m * m;
    std::vector<NewtonResult> results(m * m);
    parallel_for(m * m, [&](std::size_t idx) {
        const std::size_t i = idx / m, j = idx % m;
        const double p = box.p_lo + (box.p_hi - box.p_lo) * static_cast<double>(i) / static_cast<double>(m - 1);
        const double v = box.v_lo + (box.v_hi - box.v_lo) * static_cast<double>(j) / static_cast<double>(m - 1);
        results[idx] = newton_periodic(spec, lam, p, v, opts);
    });
    std::vector<PeriodicOrbit> found;
    for (auto& r : results) {
        if (!r.converged() || r.orbit->residual > opts.accept_tol) {
            ++report.failed;
            continue;
        }
        ++report.converged;
        if (!box.contains(r.orbit->start.p, r.orbit->start.v, 1e-9)) {
            ++report.outside_box;
            continue;
        }
        found.push_back(std::move(*r.orbit));
    }
    report.orbits = dedup_orbits(std::move(found), opts.dedup_tol);
    return report;
}

}  // namespace phibranch
