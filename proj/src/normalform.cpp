#include "phibranch/normalform.hpp"

#include <array>

namespace phibranch {

namespace {
using Buf = std::array<double, kMaxDim>;
}

SystemRhs::SystemRhs(const ProblemSpec& spec, double lam, RhsVariant variant)
    : spec_(&spec), lam_(lam), variant_(variant) {
    if (lam < 0.0) throw NumericError(NumericError::Kind::Unsupported, "lam must be non-negative");
}

SystemRhs SystemRhs::with_forcing_integral() const {
    SystemRhs out = *this;
    out.forcing_ = true;
    return out;
}

void SystemRhs::operator()(double t, std::span<const double> s, std::span<double> ds) const {
    if (variant_ == RhsVariant::Direct) {
        direct(t, s, ds);
    } else {
        split(t, s, ds);
    }
    if (forcing_) {
        const std::size_t n = spec_->dim();
        spec_->f(t, s.subspan(0, n), std::span<const double>(ds.data(), n), lam_, ds.subspan(2 * n, n));
    }
}

void SystemRhs::velocity(double t, std::span<const double> s, std::span<double> v) const {
    const std::size_t n = spec_->dim();
    const auto x = s.subspan(0, n);
    psi(*spec_, lam_, x, s.subspan(n, n), v);
    if (spec_->has_k() && lam_ != 0.0) {
        Buf kv{};
        spec_->k(t, x, std::span<double>(kv.data(), n));
        for (std::size_t i = 0; i < n; ++i) v[i] -= lam_ * kv[i];
    }
}

void SystemRhs::state_from_velocity(double t, std::span<const double> x, std::span<const double> v,
                                    std::span<double> s) const {
    const std::size_t n = spec_->dim();
    Buf shifted{};
    Buf kv{};
    spec_->k(t, x, std::span<double>(kv.data(), n));
    for (std::size_t i = 0; i < n; ++i) {
        shifted[i] = v[i] + lam_ * kv[i];
        s[i] = x[i];
    }
    spec_->phi(lam_, x, std::span<const double>(shifted.data(), n), s.subspan(n, n));
}

void SystemRhs::direct(double t, std::span<const double> s, std::span<double> ds) const {
    const std::size_t n = spec_->dim();
    const auto x = s.subspan(0, n);
    const auto dx = ds.subspan(0, n);
    velocity(t, s, dx);
    Buf tmp{};
    const std::span<double> out(tmp.data(), n);
    if (lam_ != 0.0) {
        spec_->f(t, x, dx, lam_, out);
        for (std::size_t i = 0; i < n; ++i) ds[n + i] = lam_ * tmp[i];
    } else {
        for (std::size_t i = 0; i < n; ++i) ds[n + i] = 0.0;
    }
    if (spec_->form() == Form::Autonomous) {
        spec_->g(x, dx, out);
        for (std::size_t i = 0; i < n; ++i) ds[n + i] += tmp[i];
    }
}

void SystemRhs::split(double t, std::span<const double> s, std::span<double> ds) const {
    const std::size_t n = spec_->dim();
    const auto x = s.subspan(0, n);
    const auto y = s.subspan(n, n);
    Buf q0{}, full{}, kv{}, tmp{}, base{};
    const std::span<double> q0s(q0.data(), n);
    phi0_inverse(*spec_, y, q0s);
    if (lam_ == 0.0) {
        for (std::size_t i = 0; i < n; ++i) ds[i] = q0[i];
        if (spec_->form() == Form::Autonomous) {
            spec_->g(x, q0s, std::span<double>(tmp.data(), n));
            for (std::size_t i = 0; i < n; ++i) ds[n + i] = tmp[i];
        } else {
            for (std::size_t i = 0; i < n; ++i) ds[n + i] = 0.0;
        }
        return;
    }
    // Hadamard term h = (psi - phi_0^{-1}) / lam, and H = h - k.
    psi(*spec_, lam_, x, y, std::span<double>(full.data(), n));
    spec_->k(t, x, std::span<double>(kv.data(), n));
    Buf big_h{}, xdot{};
    for (std::size_t i = 0; i < n; ++i) {
        const double h = (full[i] - q0[i]) / lam_;
        big_h[i] = h - kv[i];
        xdot[i] = q0[i] + lam_ * big_h[i];
        ds[i] = xdot[i];
    }
    const std::span<const double> xdots(xdot.data(), n);
    spec_->f(t, x, xdots, lam_, std::span<double>(tmp.data(), n));
    if (spec_->form() == Form::Autonomous) {
        // F = h_hat + f with g(x, q0 + lam H) = g(x, q0) + lam h_hat.
        Buf shifted{};
        spec_->g(x, q0s, std::span<double>(base.data(), n));
        spec_->g(x, xdots, std::span<double>(shifted.data(), n));
        for (std::size_t i = 0; i < n; ++i) {
            const double h_hat = (shifted[i] - base[i]) / lam_;
            const double big_f = h_hat + tmp[i];
            ds[n + i] = base[i] + lam_ * big_f;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) ds[n + i] = lam_ * tmp[i];
    }
}

namespace {

State evaluate(const SystemRhs& sys, double t, const State& s) {
    const std::size_t n = sys.spec().dim();
    if (s.x.size() != n || s.y.size() != n)
        throw NumericError(NumericError::Kind::Unsupported, "state dimension does not match the problem");
    if (!sys.spec().domain().contains(s.x))
        throw NumericError(NumericError::Kind::OutsideDomain, "state position outside the domain");
    std::array<double, 2 * kMaxDim> flat{}, deriv{};
    for (std::size_t i = 0; i < n; ++i) {
        flat[i] = s.x[i];
        flat[n + i] = s.y[i];
    }
    sys(t, std::span<const double>(flat.data(), 2 * n), std::span<double>(deriv.data(), 2 * n));
    State out;
    out.x.assign(deriv.begin(), deriv.begin() + static_cast<std::ptrdiff_t>(n));
    out.y.assign(deriv.begin() + static_cast<std::ptrdiff_t>(n), deriv.begin() + static_cast<std::ptrdiff_t>(2 * n));
    return out;
}

}  // namespace

State rhs(const SystemRhs& sys, double t, const State& s) {
    return evaluate(SystemRhs(sys.spec(), sys.lam(), RhsVariant::Direct), t, s);
}

State rhs_split(const SystemRhs& sys, double t, const State& s) {
    return evaluate(SystemRhs(sys.spec(), sys.lam(), RhsVariant::HadamardSplit), t, s);
}

}  // namespace phibranch
