#include "phibranch/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "phibranch/linalg.hpp"

namespace phibranch {

namespace {

constexpr double kSqrtEps = 1.4901161193847656e-08;

using Z = Vector<3>;
using Jac = std::array<std::array<double, 3>, 2>;

double sup_dist(const Z& a, const Z& b) {
    return std::max({std::fabs(a[0] - b[0]), std::fabs(a[1] - b[1]), std::fabs(a[2] - b[2])});
}

double euclid_dist(const Z& a, const Z& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

double dot(const Z& a, const Z& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

/// Unit vector spanning the kernel of a 2 x 3 Jacobian.
std::optional<Z> kernel(const Jac& j) {
    Z c{j[0][1] * j[1][2] - j[0][2] * j[1][1], j[0][2] * j[1][0] - j[0][0] * j[1][2],
        j[0][0] * j[1][1] - j[0][1] * j[1][0]};
    const double len = std::hypot(c[0], c[1], c[2]);
    if (!(len > 0.0) || !std::isfinite(len)) return std::nullopt;
    for (double& x : c) x /= len;
    return c;
}

struct Corrected {
    bool ok = false;
    Z z{};
    int iterations = 0;
    IntegrateStatus status = IntegrateStatus::Ok;
};

class Tracer {
public:
    Tracer(const ProblemSpec& spec, const TraceOptions& opts) : spec_(spec), opts_(opts) {}

    BranchResidual eval(const Z& z) const {
        if (z[0] < 0.0) return {false, IntegrateStatus::DomainExit, {}};
        return branch_residual(spec_, z[0], z[1], z[2], opts_.shoot.integration);
    }

    bool converged(const BranchResidual& r, const Z& z) const {
        return std::max(std::fabs(r.r[0]), std::fabs(r.r[1])) <= opts_.shoot.newton_tol * (1.0 + max_norm(z));
    }

    /// Central differences; forward second-order differences in lam when
    /// the stencil would reach lam < 0. Columns from first_col on.
    bool jacobian(const Z& z, const BranchResidual& r0, Jac& j, std::size_t first_col, IntegrateStatus& status) const {
        for (std::size_t c = first_col; c < 3; ++c) {
            const double h = kSqrtEps * (1.0 + std::fabs(z[c]));
            Z zp = z, zm = z;
            if (c == 0 && z[0] - h < 0.0) {
                zp[0] += h;
                zm[0] += 2.0 * h;
                const BranchResidual a = eval(zp), b = eval(zm);
                if (!a.ok || !b.ok) {
                    status = !a.ok ? a.status : b.status;
                    return false;
                }
                for (std::size_t i = 0; i < 2; ++i) j[i][c] = (-3.0 * r0.r[i] + 4.0 * a.r[i] - b.r[i]) / (2.0 * h);
                continue;
            }
            zp[c] += h;
            zm[c] -= h;
            const BranchResidual a = eval(zp), b = eval(zm);
            if (!a.ok || !b.ok) {
                status = !a.ok ? a.status : b.status;
                return false;
            }
            for (std::size_t i = 0; i < 2; ++i) j[i][c] = (a.r[i] - b.r[i]) / (2.0 * h);
        }
        return true;
    }

    /// Bordered Newton: R(z) = 0 and t . (z - anchor) = h.
    Corrected correct(Z z, const Z& anchor, const Z& t, double h) const {
        Corrected out;
        double last = INFINITY;
        for (int it = 0; it <= opts_.max_corrector; ++it) {
            const BranchResidual r = eval(z);
            if (!r.ok) {
                out.status = r.status;
                return out;
            }
            const double size = std::max(std::fabs(r.r[0]), std::fabs(r.r[1]));
            if (converged(r, z) && it > 0) {
                out.ok = true;
                out.z = z;
                out.iterations = it;
                return out;
            }
            if (it == opts_.max_corrector || (it >= 2 && size > 2.0 * last)) return out;
            last = size;
            Jac j{};
            if (!jacobian(z, r, j, 0, out.status)) return out;
            Matrix<3> a{{{j[0][0], j[0][1], j[0][2]}, {j[1][0], j[1][1], j[1][2]}, {t[0], t[1], t[2]}}};
            const double arc = dot(t, Z{z[0] - anchor[0], z[1] - anchor[1], z[2] - anchor[2]}) - h;
            const auto step = solve(a, Z{-r.r[0], -r.r[1], -arc});
            if (!step) return out;
            for (std::size_t i = 0; i < 3; ++i) z[i] += (*step)[i];
        }
        return out;
    }

    /// Newton in (p, v) at the fixed lam = z[0].
    Corrected correct_fixed(Z z) const {
        Corrected out;
        double last = INFINITY;
        for (int it = 0; it <= opts_.shoot.max_iterations; ++it) {
            const BranchResidual r = eval(z);
            if (!r.ok) {
                out.status = r.status;
                return out;
            }
            const double size = std::max(std::fabs(r.r[0]), std::fabs(r.r[1]));
            if (converged(r, z)) {
                out.ok = true;
                out.z = z;
                out.iterations = it;
                return out;
            }
            if (it == opts_.shoot.max_iterations || (it >= 2 && size > 2.0 * last)) return out;
            last = size;
            Jac j{};
            if (!jacobian(z, r, j, 1, out.status)) return out;
            const Matrix<2> a{{{j[0][1], j[0][2]}, {j[1][1], j[1][2]}}};
            if (!(condition_number(a) <= opts_.shoot.max_condition)) return out;
            const auto step = solve(a, Vector<2>{-r.r[0], -r.r[1]});
            if (!step) return out;
            z[1] += (*step)[0];
            z[2] += (*step)[1];
        }
        return out;
    }

    std::optional<Z> tangent_at(const Z& z, IntegrateStatus& status) const {
        const BranchResidual r = eval(z);
        if (!r.ok) {
            status = r.status;
            return std::nullopt;
        }
        Jac j{};
        if (!jacobian(z, r, j, 0, status)) return std::nullopt;
        return kernel(j);
    }

    std::optional<PeriodicOrbit> verify(const Z& z) const {
        ShootOptions o = opts_.shoot;
        o.integration.tol = opts_.verify_tol;
        return verify_orbit(spec_, z[0], z[1], z[2], o);
    }

private:
    const ProblemSpec& spec_;
    const TraceOptions& opts_;
};

}  // namespace

std::string to_string(Termination termination) {
    switch (termination) {
        case Termination::LambdaBound: return "lambda-bound";
        case Termination::ArclengthBudget: return "arclength-budget";
        case Termination::StateBound: return "state-bound";
        case Termination::DomainExit: return "domain-exit";
        case Termination::StepFailure: return "step-failure";
        case Termination::ClosedLoop: return "closed-loop";
    }
    return "unknown";
}

double Branch::max_lambda() const {
    double m = 0.0;
    for (const BranchPoint& p : points) m = std::max(m, p.point.lam);
    for (double lf : fold_lambdas) m = std::max(m, lf);
    return m;
}

double Branch::max_gap() const {
    double m = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const StartingPoint& a = points[i - 1].point;
        const StartingPoint& b = points[i].point;
        m = std::max({m, std::fabs(a.lam - b.lam), std::fabs(a.p - b.p), std::fabs(a.v - b.v)});
    }
    return m;
}

BranchResidual branch_residual(const ProblemSpec& spec, double lam, double p, double v,
                               const IntegrateOptions& opts) {
    if (spec.dim() != 1)
        throw NumericError(NumericError::Kind::Unsupported, "continuation is implemented for scalar problems (n = 1)");
    BranchResidual out;
    if (!spec.domain().contains(p) || lam < 0.0) {
        out.status = IntegrateStatus::DomainExit;
        return out;
    }
    const bool scaled = spec.form() == Form::LambdaPerturbed;
    const SystemRhs base(spec, lam);
    const SystemRhs sys = scaled ? base.with_forcing_integral() : base;
    std::array<double, 3> s0{};
    try {
        sys.state_from_velocity(0.0, {&p, 1}, {&v, 1}, std::span<double>(s0.data(), 2));
    } catch (const NumericError&) {
        out.status = IntegrateStatus::InverseFailure;
        return out;
    }
    if (!std::isfinite(s0[1])) {
        out.status = IntegrateStatus::BlowUp;
        return out;
    }
    IntegrateOptions o = opts;
    o.samples = 0;
    const Trajectory traj = integrate_interval(sys, std::span<const double>(s0.data(), sys.state_dim()), 0.0,
                                               spec.period(), o);
    out.status = traj.status;
    if (!traj.ok()) return out;
    out.ok = true;
    out.r[0] = traj.final_state()[0] - p;
    out.r[1] = scaled ? traj.final_state()[2] : traj.velocities.back()[0] - v;
    return out;
}

Branch trace(const ProblemSpec& spec, double p0, const TraceOptions& opts) {
    if (spec.dim() != 1)
        throw NumericError(NumericError::Kind::Unsupported, "continuation is implemented for scalar problems (n = 1)");
    const bool autonomous = spec.form() == Form::Autonomous;
    auto field = [&](double p) { return autonomous ? gamma(spec, p) : average_wind(spec, p); };
    const char* fname = autonomous ? "gamma" : "w";
    {
        std::ostringstream msg;
        if (!spec.domain().contains(p0)) {
            msg << "seed " << p0 << " is outside the domain";
            throw NumericError(NumericError::Kind::BadSeed, msg.str());
        }
        const double value = field(p0);
        const double hs = 1e-6 * (1.0 + std::fabs(p0));
        const double slope = (field(p0 + hs) - field(p0 - hs)) / (2.0 * hs);
        if (!(std::fabs(value) <= 1e-9)) {
            msg << "seed " << p0 << " is not a zero of " << fname << " (value " << value << ")";
            throw NumericError(NumericError::Kind::BadSeed, msg.str());
        }
        if (!(std::fabs(slope) >= 1e-8)) {
            msg << "seed " << p0 << " is a degenerate zero of " << fname;
            throw NumericError(NumericError::Kind::BadSeed, msg.str());
        }
    }

    const Tracer tr(spec, opts);
    Branch branch;
    const Corrected start = tr.correct_fixed(Z{0.0, p0, 0.0});
    if (!start.ok) throw NumericError(NumericError::Kind::BadSeed, "no periodic solution at the seed");
    const Z seed = start.z;
    branch.seed = {seed[0], seed[1], seed[2]};

    IntegrateStatus status = IntegrateStatus::Ok;
    auto t0 = tr.tangent_at(seed, status);
    if (!t0 || std::fabs((*t0)[0]) < 1e-8)
        throw NumericError(NumericError::Kind::BadSeed, "the branch is not transversal to lam = 0 at the seed");
    Z t = *t0;
    if (t[0] < 0.0)
        for (double& x : t) x = -x;

    auto record = [&](const Z& z, double s, const Z& tan, bool fold, double fold_lam) {
        const auto orbit = tr.verify(z);
        if (!orbit) return false;
        BranchPoint bp;
        bp.s = s;
        bp.point = {z[0], z[1], z[2]};
        bp.c1norm = orbit->c1norm;
        bp.diam = orbit->diam;
        bp.residual = orbit->residual;
        bp.tangent = tan;
        bp.fold = fold;
        branch.points.push_back(bp);
        if (fold) {
            branch.folds.push_back(s);
            branch.fold_lambdas.push_back(fold_lam);
        }
        return true;
    };
    if (!record(seed, 0.0, t, false, 0.0))
        throw NumericError(NumericError::Kind::BadSeed, "the seed orbit does not verify");

    enum class Landing { None, Zero, Max };
    Z z = seed;
    double s = 0.0;
    double h = opts.h0;
    IntegrateStatus last_failure = IntegrateStatus::Ok;
    auto finish = [&](Termination why, std::string msg) {
        branch.termination = why;
        branch.message = std::move(msg);
        return branch;
    };

    while (true) {
        if (s >= opts.smax) return finish(Termination::ArclengthBudget, "arclength budget exhausted");
        Landing landing = Landing::None;
        double step = h;
        Z pred{z[0] + h * t[0], z[1] + h * t[1], z[2] + h * t[2]};
        if (pred[0] < 0.0 && t[0] < 0.0) {
            landing = Landing::Zero;
            step = z[0] / -t[0];
        } else if (pred[0] > opts.lam_max && t[0] > 0.0) {
            landing = Landing::Max;
            step = (opts.lam_max - z[0]) / t[0];
        }
        if (landing != Landing::None) {
            pred = {z[0] + step * t[0], z[1] + step * t[1], z[2] + step * t[2]};
            pred[0] = landing == Landing::Zero ? 0.0 : opts.lam_max;
        }

        const Corrected c = landing == Landing::None ? tr.correct(pred, z, t, h) : tr.correct_fixed(pred);
        std::optional<Z> tn;
        bool accepted = c.ok && sup_dist(c.z, z) <= 2.0 * std::max(step, 0.0) + 1e-12;
        if (accepted) {
            tn = tr.tangent_at(c.z, status);
            accepted = tn.has_value();
        }
        if (accepted) {
            if (landing == Landing::Zero) {
                if ((*tn)[0] < 0.0)
                    for (double& x : *tn) x = -x;
            } else if (dot(*tn, t) < 0.0) {
                for (double& x : *tn) x = -x;
            }
            // A sharp turn means the corrector jumped to another sheet.
            accepted = landing != Landing::None || dot(*tn, t) >= 0.5;
        }
        if (!accepted) {
            if (!c.ok && c.status != IntegrateStatus::Ok) last_failure = c.status;
            h *= 0.5;
            if (h < opts.hmin) {
                if (branch.points.size() == 1)
                    throw NumericError(NumericError::Kind::BadSeed, "corrector failed on the first step");
                const bool exited = last_failure == IntegrateStatus::DomainExit;
                return finish(exited ? Termination::DomainExit : Termination::StepFailure,
                              exited ? "solutions leave the domain" : "step size fell below hmin");
            }
            continue;
        }
        const Z zn = c.z;
        if (std::fabs(zn[1]) > opts.state_bound || std::fabs(zn[2]) > opts.state_bound)
            return finish(Termination::StateBound, "starting point exceeded the state bound");
        const bool fold = landing != Landing::Zero && sign_of((*tn)[0]) * sign_of(t[0]) < 0;
        const double s_next = s + euclid_dist(zn, z);
        // With dlam/ds taken linear across the step, lam peaks where it
        // vanishes.
        double fold_lam = zn[0];
        if (fold) {
            const double d = (s_next - s) * t[0] / (t[0] - (*tn)[0]);
            fold_lam = z[0] + 0.5 * t[0] * d;
        }
        if (!record(zn, s_next, *tn, fold, fold_lam)) {
            h *= 0.5;
            if (h < opts.hmin) return finish(Termination::StepFailure, "branch point failed verification");
            continue;
        }
        s = s_next;
        if (s > 10.0 * opts.h0 && sup_dist(zn, seed) < opts.closed_tol)
            return finish(Termination::ClosedLoop, "branch returned to its seed");
        if (landing == Landing::Max) return finish(Termination::LambdaBound, "reached lam_max");
        z = zn;
        t = *tn;
        if (c.iterations <= 3) h = std::min(1.3 * h, opts.hmax);
    }
}

std::vector<StartingPoint> branch_crossings(const ProblemSpec& spec, const std::vector<Branch>& branches,
                                            double level, double dedup_tol, const ShootOptions& opts) {
    for (const Branch& b : branches)
        for (double lf : b.fold_lambdas)
            if (std::fabs(lf - level) <= 1e-9) {
                std::ostringstream msg;
                msg << "lam = " << level << " touches a fold; the crossing count is not defined";
                throw NumericError(NumericError::Kind::Tangential, msg.str());
            }
    std::vector<StartingPoint> found;
    auto add = [&](double p, double v) {
        StartingPoint sp{level, p, v};
        if (level > 0.0 || spec.form() == Form::Autonomous) {
            const NewtonResult r = newton_periodic(spec, level, p, v, opts);
            if (r.converged()) sp = r.orbit->start;
        }
        const bool duplicate = std::any_of(found.begin(), found.end(), [&](const StartingPoint& o) {
            return std::max(std::fabs(o.p - sp.p), std::fabs(o.v - sp.v)) < dedup_tol;
        });
        if (!duplicate) found.push_back(sp);
    };
    for (const Branch& b : branches) {
        const auto& pts = b.points;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double da = pts[i].point.lam - level;
            if (std::fabs(da) <= 1e-12) {
                add(pts[i].point.p, pts[i].point.v);
                continue;
            }
            if (i + 1 == pts.size()) break;
            const double db = pts[i + 1].point.lam - level;
            if (std::fabs(db) > 1e-12 && da * db < 0.0) {
                const double f = da / (da - db);
                add(pts[i].point.p + f * (pts[i + 1].point.p - pts[i].point.p),
                    pts[i].point.v + f * (pts[i + 1].point.v - pts[i].point.v));
            }
        }
    }
    std::sort(found.begin(), found.end(), [](const StartingPoint& a, const StartingPoint& b) {
        return a.p != b.p ? a.p < b.p : a.v < b.v;
    });
    return found;
}

std::size_t branch_solution_count(const ProblemSpec& spec, const std::vector<Branch>& branches, double level,
                                  double dedup_tol, const ShootOptions& opts) {
    return branch_crossings(spec, branches, level, dedup_tol, opts).size();
}

void write_branch_csv(std::ostream& out, const Branch& branch) {
    out << "s,lambda,p,v,c1norm,diam,residual,fold_flag\n";
    char buf[512];
    for (const BranchPoint& bp : branch.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", bp.s, bp.point.lam,
                      bp.point.p, bp.point.v, bp.c1norm, bp.diam, bp.residual, bp.fold ? 1 : 0);
        out << buf;
    }
}

}  // namespace phibranch
