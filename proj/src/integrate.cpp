#include "phibranch/integrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace phibranch {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense output (continuous extension of order 4).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

constexpr std::size_t kMaxState = 3 * kMaxDim;
using Vec = std::array<double, kMaxState>;

struct Stepper {
    const SystemRhs& sys;
    std::size_t dim;
    Vec k1{}, k2{}, k3{}, k4{}, k5{}, k6{}, k7{}, tmp{}, ynew{}, err{};

    void eval(double t, const Vec& y, Vec& dy) const {
        sys(t, std::span<const double>(y.data(), dim), std::span<double>(dy.data(), dim));
    }

    /// One trial step from (t, y) with k1 = f(t, y) already set. Fills ynew,
    /// k7 = f(t + h, ynew), and err.
    void step(double t, const Vec& y, double h) {
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        eval(t + c2 * h, tmp, k2);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        eval(t + c3 * h, tmp, k3);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        eval(t + c4 * h, tmp, k4);
        for (std::size_t i = 0; i < dim; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        eval(t + c5 * h, tmp, k5);
        for (std::size_t i = 0; i < dim; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        eval(t + h, tmp, k6);
        for (std::size_t i = 0; i < dim; ++i)
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        eval(t + h, ynew, k7);
        for (std::size_t i = 0; i < dim; ++i)
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }

    /// Dense output at theta in [0, 1] of the last accepted step.
    void dense(const Vec& y0, double h, double theta, Vec& out) const {
        const double t1 = 1.0 - theta;
        for (std::size_t i = 0; i < dim; ++i) {
            const double r2 = ynew[i] - y0[i];
            const double r3 = h * k1[i] - r2;
            const double r4 = r2 - h * k7[i] - r3;
            const double r5 = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
            out[i] = y0[i] + theta * (r2 + t1 * (r3 + theta * (r4 + t1 * r5)));
        }
    }
};

double error_norm(const Vec& err, const Vec& y, const Vec& ynew, std::size_t dim, double tol) {
    double worst = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double scale = tol * (1.0 + std::max(std::fabs(y[i]), std::fabs(ynew[i])));
        worst = std::max(worst, std::fabs(err[i]) / scale);
    }
    return worst;
}

double max_abs(const Vec& y, std::size_t dim) {
    double m = 0.0;
    for (std::size_t i = 0; i < dim; ++i) m = std::max(m, std::fabs(y[i]));
    return m;
}

bool all_finite(const Vec& y, std::size_t dim) {
    for (std::size_t i = 0; i < dim; ++i)
        if (!std::isfinite(y[i])) return false;
    return true;
}

/// Initial step guess (Hairer, Norsett & Wanner, II.4).
double initial_step(Stepper& st, double t, const Vec& y, double span, double tol) {
    const std::size_t dim = st.dim;
    double d0 = 0.0, d1n = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double sc = tol * (1.0 + std::fabs(y[i]));
        d0 = std::max(d0, std::fabs(y[i]) / sc);
        d1n = std::max(d1n, std::fabs(st.k1[i]) / sc);
    }
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, std::fabs(span));
    Vec y1{}, f1{};
    const double sgn = span < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < dim; ++i) y1[i] = y[i] + sgn * h0 * st.k1[i];
    st.eval(t + sgn * h0, y1, f1);
    double d2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double sc = tol * (1.0 + std::fabs(y[i]));
        d2 = std::max(d2, std::fabs(f1[i] - st.k1[i]) / sc / h0);
    }
    const double dmax = std::max(d1n, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    return std::min({100.0 * h0, h1, std::fabs(span)});
}

bool position_ok(const SystemRhs& sys, const Vec& y, int component) {
    const ProblemSpec& spec = sys.spec();
    if (spec.dim() == 1) return spec.domain().component(y[0]) == component;
    return spec.domain().contains(std::span<const double>(y.data(), spec.dim()));
}

struct Recorder {
    const SystemRhs& sys;
    std::size_t dim;
    Trajectory& traj;
    std::vector<double> sample_times;
    std::size_t next = 0;

    void push(double t, const Vec& y) {
        traj.times.push_back(t);
        traj.states.emplace_back(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(dim));
        const std::size_t n = sys.spec().dim();
        std::vector<double> v(n);
        sys.velocity(t, std::span<const double>(y.data(), dim), v);
        traj.velocities.push_back(std::move(v));
    }
};

}  // namespace

std::string to_string(IntegrateStatus status) {
    switch (status) {
        case IntegrateStatus::Ok: return "ok";
        case IntegrateStatus::DomainExit: return "domain-exit";
        case IntegrateStatus::StepUnderflow: return "step-underflow";
        case IntegrateStatus::BlowUp: return "blow-up";
        case IntegrateStatus::InverseFailure: return "inverse-failure";
    }
    return "unknown";
}

Trajectory integrate_interval(const SystemRhs& sys, std::span<const double> s0, double t0, double t1,
                              const IntegrateOptions& opts) {
    const std::size_t dim = sys.state_dim();
    Trajectory traj;
    traj.exit_time = t0;
    const double span = t1 - t0;
    const double dir = span < 0 ? -1.0 : 1.0;
    const double tol = std::clamp(opts.tol, 1e-13, 1e-3);

    Vec y{};
    std::copy(s0.begin(), s0.begin() + static_cast<std::ptrdiff_t>(dim), y.begin());

    Recorder rec{sys, dim, traj, {}, 0};
    const std::size_t intervals = std::max<std::size_t>(opts.samples, 1);
    for (std::size_t j = 0; j <= intervals; ++j)
        rec.sample_times.push_back(j == intervals ? t1 : t0 + span * static_cast<double>(j) / static_cast<double>(intervals));

    // Segment boundaries: breakpoints strictly between t0 and t1.
    std::vector<double> cuts{t0};
    for (double b : sys.spec().breakpoints()) {
        // Breakpoints repeat with period T.
        const double T = sys.spec().period();
        const double lo = std::min(t0, t1), hi = std::max(t0, t1);
        for (double shift = std::floor(lo / T) * T; shift <= hi; shift += T) {
            const double c = b + shift;
            if (c > lo && c < hi) cuts.push_back(c);
        }
    }
    std::sort(cuts.begin() + 1, cuts.end(), [dir](double a, double b) { return dir > 0 ? a < b : a > b; });
    cuts.push_back(t1);

    const int component = sys.spec().dim() == 1 ? sys.spec().domain().component(y[0]) : 0;
    Stepper st{sys, dim};

    auto fail = [&](IntegrateStatus status, double t, std::string msg) {
        traj.status = status;
        traj.exit_time = t;
        traj.message = std::move(msg);
        return traj;
    };

    try {
        if (!position_ok(sys, y, component) || component < 0)
            return fail(IntegrateStatus::DomainExit, t0, "initial position outside the domain");
        rec.push(t0, y);
        rec.next = 1;

        double t = t0;
        for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
            const double seg_end = cuts[seg + 1];
            st.eval(t, y, st.k1);
            double h = dir * initial_step(st, t, y, seg_end - t, tol);
            double err_old = 1e-4;
            bool last_rejected = false;
            const double h_floor = 1e-14 * std::max(std::fabs(span), 1e-300);
            while (dir * (seg_end - t) > 0.0) {
                if (traj.steps + traj.rejected >= opts.max_steps)
                    return fail(IntegrateStatus::StepUnderflow, t, "step budget exhausted");
                bool final_step = false;
                if (dir * (t + h - seg_end) >= 0.0 || std::fabs(seg_end - (t + h)) < 1e-12 * std::fabs(h)) {
                    h = seg_end - t;
                    final_step = true;
                }
                if (std::fabs(h) < h_floor) return fail(IntegrateStatus::StepUnderflow, t, "step size underflow");
                st.step(t, y, h);
                const double err = all_finite(st.ynew, dim) && all_finite(st.k7, dim)
                                       ? error_norm(st.err, y, st.ynew, dim, tol)
                                       : 1e10;
                if (err <= 1.0) {
                    const double t_new = final_step ? seg_end : t + h;
                    if (!position_ok(sys, st.ynew, component)) {
                        // Locate the exit on the dense output.
                        double lo = 0.0, hi = 1.0;
                        for (int it = 0; it < 60; ++it) {
                            const double mid = 0.5 * (lo + hi);
                            Vec ys{};
                            st.dense(y, h, mid, ys);
                            (position_ok(sys, ys, component) ? lo : hi) = mid;
                        }
                        return fail(IntegrateStatus::DomainExit, t + hi * h, "trajectory left the domain");
                    }
                    // Interior samples in (t, t_new]; the endpoint is recorded exactly.
                    while (rec.next + 1 < rec.sample_times.size() &&
                           dir * (rec.sample_times[rec.next] - t_new) <= 0.0) {
                        const double ts = rec.sample_times[rec.next];
                        Vec ys{};
                        st.dense(y, h, (ts - t) / h, ys);
                        rec.push(ts, ys);
                        ++rec.next;
                    }
                    y = st.ynew;
                    st.k1 = st.k7;
                    t = t_new;
                    ++traj.steps;
                    if (max_abs(y, dim) > opts.blowup) return fail(IntegrateStatus::BlowUp, t, "solution blew up");
                    double ratio = 0.9 * std::pow(std::max(err, 1e-16), -0.17) * std::pow(err_old, 0.04);
                    ratio = std::clamp(ratio, 0.2, 5.0);
                    if (last_rejected) ratio = std::min(ratio, 1.0);
                    err_old = std::max(err, 1e-4);
                    last_rejected = false;
                    h *= ratio;
                } else {
                    ++traj.rejected;
                    last_rejected = true;
                    const double ratio = err >= 1e9 ? 0.2 : std::max(0.2, 0.9 * std::pow(err, -0.2));
                    h *= ratio;
                }
            }
        }
        rec.push(t1, y);
        traj.exit_time = t1;
    } catch (const NumericError& e) {
        return fail(IntegrateStatus::InverseFailure, traj.times.empty() ? t0 : traj.times.back(), e.what());
    }
    return traj;
}

Trajectory integrate(const SystemRhs& sys, const State& s0, double T, const IntegrateOptions& opts) {
    const std::size_t n = sys.spec().dim();
    std::vector<double> flat(2 * n);
    std::copy(s0.x.begin(), s0.x.end(), flat.begin());
    std::copy(s0.y.begin(), s0.y.end(), flat.begin() + static_cast<std::ptrdiff_t>(n));
    return integrate_interval(sys, flat, 0.0, T, opts);
}

std::vector<double> integrate_fixed(const SystemRhs& sys, std::span<const double> s0, double t0, double t1,
                                    std::size_t steps) {
    const std::size_t dim = sys.state_dim();
    Stepper st{sys, dim};
    Vec y{};
    std::copy(s0.begin(), s0.begin() + static_cast<std::ptrdiff_t>(dim), y.begin());
    const double h = (t1 - t0) / static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = t0 + h * static_cast<double>(i);
        st.eval(t, y, st.k1);
        st.step(t, y, h);
        y = st.ynew;
    }
    return {y.begin(), y.begin() + static_cast<std::ptrdiff_t>(dim)};
}

}  // namespace phibranch
