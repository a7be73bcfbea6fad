#include "phibranch/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace phibranch {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(double value, const char* what) {
    if (!std::isfinite(value))
        throw NumericError(NumericError::Kind::NonFinite, std::string("non-finite value of ") + what);
}

/// Interior points of a domain (n = 1), a handful per interval.
std::vector<double> interior_samples(const Domain& domain, int per_interval) {
    std::vector<double> out;
    for (const Interval& iv : domain.intervals()) {
        const double lo = std::isfinite(iv.lo) ? iv.lo : (std::isfinite(iv.hi) ? iv.hi - 6.0 : -3.0);
        const double hi = std::isfinite(iv.hi) ? iv.hi : (std::isfinite(iv.lo) ? iv.lo + 6.0 : 3.0);
        for (int i = 1; i <= per_interval; ++i) out.push_back(lo + (hi - lo) * i / (per_interval + 1));
    }
    return out;
}

}  // namespace

std::string to_string(Form form) {
    return form == Form::Autonomous ? "autonomous" : "lambda-perturbed";
}

Form form_from_string(const std::string& text) {
    if (text == "autonomous" || text == "autonomous-plus-perturbation") return Form::Autonomous;
    if (text == "lambda-perturbed") return Form::LambdaPerturbed;
    throw ConfigError("unknown form '" + text + "' (expected autonomous or lambda-perturbed)");
}

bool Interval::bounded() const noexcept { return std::isfinite(lo) && std::isfinite(hi); }

Domain::Domain() : intervals_{{-kInf, kInf}}, dim_(1) {}

Domain::Domain(std::vector<Interval> intervals, std::size_t dim) : intervals_(std::move(intervals)), dim_(dim) {
    if (dim_ == 0 || dim_ > kMaxDim) throw ConfigError("domain dimension out of range");
    if (intervals_.empty()) throw ConfigError("domain must be nonempty");
    for (const Interval& iv : intervals_)
        if (!(iv.lo < iv.hi)) throw ConfigError("domain interval with lo >= hi");
    if (dim_ == 1) {
        std::sort(intervals_.begin(), intervals_.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        for (std::size_t i = 1; i < intervals_.size(); ++i)
            if (intervals_[i].lo < intervals_[i - 1].hi) throw ConfigError("domain intervals overlap");
    } else if (intervals_.size() != dim_) {
        throw ConfigError("box domain needs one interval per coordinate");
    }
}

Domain Domain::whole(std::size_t dim) {
    return Domain(std::vector<Interval>(dim, Interval{-kInf, kInf}), dim);
}

Domain Domain::excluding(std::span<const double> points) const {
    if (dim_ != 1) throw ConfigError("excluded points are only supported for n = 1");
    std::vector<Interval> parts = intervals_;
    for (double c : points) {
        std::vector<Interval> next;
        for (const Interval& iv : parts) {
            if (iv.contains(c)) {
                next.push_back({iv.lo, c});
                next.push_back({c, iv.hi});
            } else {
                next.push_back(iv);
            }
        }
        parts = std::move(next);
    }
    return Domain(std::move(parts), 1);
}

bool Domain::contains(std::span<const double> x) const {
    if (dim_ == 1) return component(x[0]) >= 0;
    for (std::size_t i = 0; i < dim_; ++i)
        if (!intervals_[i].contains(x[i])) return false;
    return true;
}

bool Domain::contains(double x) const { return component(x) >= 0; }

int Domain::component(double x) const {
    if (dim_ != 1) return -1;
    for (std::size_t i = 0; i < intervals_.size(); ++i)
        if (intervals_[i].contains(x)) return static_cast<int>(i);
    return -1;
}

std::vector<double> Domain::sample_point() const {
    auto pick = [](const Interval& iv) {
        if (iv.contains(0.0)) return 0.0;
        if (!std::isfinite(iv.lo)) return iv.hi - 1.0;
        if (!std::isfinite(iv.hi)) return iv.lo + 1.0;
        return 0.5 * (iv.lo + iv.hi);
    };
    if (dim_ == 1) {
        for (const Interval& iv : intervals_)
            if (iv.contains(0.0)) return {0.0};
        return {pick(intervals_.front())};
    }
    std::vector<double> out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = pick(intervals_[i]);
    return out;
}

std::vector<std::string> variable_slots(std::size_t n) {
    std::vector<std::string> slots{"t", "lam"};
    for (const char* base : {"x", "v", "u"}) {
        if (n == 1) {
            slots.emplace_back(base);
        } else {
            for (std::size_t i = 1; i <= n; ++i) slots.push_back(base + std::to_string(i));
        }
    }
    return slots;
}

ProblemSpec::ProblemSpec(std::string name, Form form, std::size_t n, double period, PhiMap phi,
                         std::vector<Expr> g, std::vector<Expr> f, std::optional<std::vector<Expr>> k,
                         Domain domain, std::vector<double> breakpoints)
    : name_(std::move(name)),
      form_(form),
      n_(n),
      period_(period),
      phi_(std::move(phi)),
      g_(std::move(g)),
      f_(std::move(f)),
      k_(std::move(k)),
      domain_(std::move(domain)),
      breakpoints_(std::move(breakpoints)),
      slots_(variable_slots(n)) {
    if (n_ == 0 || n_ > kMaxDim) throw ConfigError("dimension n must be in [1, " + std::to_string(kMaxDim) + "]");
    if (!(period_ > 0.0) || !std::isfinite(period_)) throw ConfigError("period must be positive and finite");
    if (domain_.dim() != n_) throw ConfigError("domain dimension does not match n");
    auto check_count = [&](const std::vector<Expr>& v, const char* what) {
        if (v.size() != n_) throw ConfigError(std::string(what) + " needs exactly n components");
    };
    check_count(phi_.phi, "phi");
    check_count(f_, "f");
    if (phi_.psi) check_count(*phi_.psi, "psi");
    if (k_) check_count(*k_, "k");
    if (form_ == Form::Autonomous) {
        check_count(g_, "g");
    } else if (!g_.empty()) {
        throw ConfigError("g is not allowed for the lambda-perturbed form");
    }
    if (n_ > 1 && !phi_.psi) throw ConfigError("n > 1 requires an analytic psi");

    // Each expression may only use the variables of its own signature.
    auto bind = [&](const std::vector<Expr>& exprs, std::initializer_list<const char*> allowed,
                    const char* what) {
        std::vector<std::string> names;
        for (const char* a : allowed) {
            if (std::string(a) == "t" || std::string(a) == "lam") {
                names.emplace_back(a);
            } else if (n_ == 1) {
                names.emplace_back(a);
            } else {
                for (std::size_t i = 1; i <= n_; ++i) names.push_back(a + std::to_string(i));
            }
        }
        std::vector<BoundExpr> out;
        for (const Expr& e : exprs) {
            for (const std::string& v : e.free_vars())
                if (std::find(names.begin(), names.end(), v) == names.end())
                    throw ConfigError(std::string(what) + ": variable '" + v + "' not allowed here");
            out.emplace_back(e, slots_);
        }
        return out;
    };
    phi_bound_ = bind(phi_.phi, {"lam", "x", "v"}, "phi");
    if (phi_.psi) psi_bound_ = bind(*phi_.psi, {"lam", "x", "u"}, "psi");
    g_bound_ = bind(g_, {"x", "v"}, "g");
    f_bound_ = bind(f_, {"t", "x", "v", "lam"}, "f");
    if (k_) k_bound_ = bind(*k_, {"t", "x"}, "k");

    std::sort(breakpoints_.begin(), breakpoints_.end());
    for (double b : breakpoints_)
        if (!(b > 0.0 && b < period_)) throw ConfigError("breakpoints must lie strictly inside (0, T)");
    breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
}

void ProblemSpec::load(Slots& s, double t, double lam, std::span<const double> x, std::span<const double> v,
                       std::span<const double> u) const {
    s[0] = t;
    s[1] = lam;
    for (std::size_t i = 0; i < n_; ++i) {
        s[2 + i] = x.empty() ? 0.0 : x[i];
        s[2 + n_ + i] = v.empty() ? 0.0 : v[i];
        s[2 + 2 * n_ + i] = u.empty() ? 0.0 : u[i];
    }
}

void ProblemSpec::phi(double lam, std::span<const double> x, std::span<const double> v, std::span<double> out) const {
    Slots s;
    load(s, 0.0, lam, x, v, {});
    for (std::size_t i = 0; i < n_; ++i) out[i] = phi_bound_[i](s);
}

void ProblemSpec::g(std::span<const double> x, std::span<const double> v, std::span<double> out) const {
    Slots s;
    load(s, 0.0, 0.0, x, v, {});
    for (std::size_t i = 0; i < n_; ++i) out[i] = g_bound_.empty() ? 0.0 : g_bound_[i](s);
}

void ProblemSpec::f(double t, std::span<const double> x, std::span<const double> v, double lam,
                    std::span<double> out) const {
    Slots s;
    load(s, t, lam, x, v, {});
    for (std::size_t i = 0; i < n_; ++i) out[i] = f_bound_[i](s);
}

void ProblemSpec::k(double t, std::span<const double> x, std::span<double> out) const {
    if (k_bound_.empty()) {
        std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n_), 0.0);
        return;
    }
    Slots s;
    load(s, t, 0.0, x, {}, {});
    for (std::size_t i = 0; i < n_; ++i) out[i] = k_bound_[i](s);
}

void ProblemSpec::psi_analytic(double lam, std::span<const double> x, std::span<const double> u,
                               std::span<double> out) const {
    Slots s;
    load(s, 0.0, lam, x, {}, u);
    for (std::size_t i = 0; i < n_; ++i) out[i] = psi_bound_[i](s);
}

double ProblemSpec::phi(double lam, double x, double v) const {
    double out = 0.0;
    phi(lam, {&x, 1}, {&v, 1}, {&out, 1});
    return out;
}

double ProblemSpec::g(double x, double v) const {
    double out = 0.0;
    g({&x, 1}, {&v, 1}, {&out, 1});
    return out;
}

double ProblemSpec::f(double t, double x, double v, double lam) const {
    double out = 0.0;
    f(t, {&x, 1}, {&v, 1}, lam, {&out, 1});
    return out;
}

double ProblemSpec::k(double t, double x) const {
    double out = 0.0;
    k(t, {&x, 1}, {&out, 1});
    return out;
}

namespace {

double psi_numeric(const ProblemSpec& spec, double lam, double x, double u) {
    const InverseOptions& opt = spec.inverse_options();
    auto r = [&](double q) { return spec.phi(lam, x, q) - u; };

    double w = 1.0 + std::fabs(u);
    double a = -w, b = w;
    double ra = r(a), rb = r(b);
    int expansions = 0;
    while (!((ra <= 0.0 && rb >= 0.0) || (ra >= 0.0 && rb <= 0.0))) {
        if (!std::isfinite(ra) || !std::isfinite(rb) || ++expansions > opt.max_expansions)
            throw NumericError(NumericError::Kind::BracketFailure,
                               "could not bracket phi(lam, x, .) = u; phi may not be onto");
        w *= opt.growth;
        a = -w;
        b = w;
        ra = r(a);
        rb = r(b);
    }
    if (ra == 0.0) return a;
    if (rb == 0.0) return b;
    const int dir = ra < 0.0 ? 1 : -1;
    const int hint = spec.phi_map().monotone_hint;
    if (hint != 0 && hint != dir)
        throw NumericError(NumericError::Kind::NonMonotone, "phi decreases where monotone_hint says it increases");

    // Orient so that the residual is increasing: s(q) = dir * r(q).
    // Newton steps use a central-difference slope at the first iterate,
    // refreshed by secant slopes between successive iterates; any step that
    // leaves the bracket or contracts too slowly is replaced by bisection.
    auto s = [&](double q) { return dir * r(q); };
    double lo = a, hi = b;  // s(lo) < 0 < s(hi)
    double q = 0.0;
    double sq = s(q);
    const double h = 1e-7;
    double slope = (s(q + h) - s(q - h)) / (2.0 * h);
    double dx_old = hi - lo;
    for (int it = 0; it < opt.max_iterations; ++it) {
        if (!std::isfinite(sq)) throw NumericError(NumericError::Kind::NonFinite, "non-finite phi during inversion");
        if (sq == 0.0) return q;
        if (sq < 0.0) {
            lo = q;
        } else {
            hi = q;
        }
        const double newton = q - sq / slope;
        const bool use_newton = slope > 0.0 && newton > lo && newton < hi && std::fabs(2.0 * sq) <= std::fabs(dx_old * slope);
        const double next = use_newton ? newton : 0.5 * (lo + hi);
        const double dx = next - q;
        dx_old = use_newton ? dx : hi - lo;
        const double s_next = s(next);
        if (dx != 0.0) {
            const double secant = (s_next - sq) / dx;
            if (secant < 0.0 && std::fabs(s_next - sq) > 1e-9 * (1.0 + std::fabs(u)))
                throw NumericError(NumericError::Kind::NonMonotone, "phi(lam, x, .) is not monotone");
            if (secant > 0.0 && std::isfinite(secant)) slope = secant;
        }
        q = next;
        sq = s_next;
        if (std::fabs(dx) <= 4.0 * kEps * (1.0 + std::fabs(q)) || hi - lo <= 4.0 * kEps * (1.0 + std::fabs(q))) break;
    }
    if (std::fabs(r(q)) > opt.tolerance * (1.0 + std::fabs(u)))
        throw NumericError(NumericError::Kind::BracketFailure, "partial inverse did not reach tolerance");
    return q;
}

}  // namespace

void psi(const ProblemSpec& spec, double lam, std::span<const double> x, std::span<const double> u,
         std::span<double> out) {
    if (spec.has_analytic_psi()) {
        spec.psi_analytic(lam, x, u, out);
        return;
    }
    if (spec.dim() != 1)
        throw NumericError(NumericError::Kind::Unsupported, "numeric partial inverse is only available for n = 1");
    out[0] = psi_numeric(spec, lam, x[0], u[0]);
}

double psi(const ProblemSpec& spec, double lam, double x, double u) {
    double out = 0.0;
    psi(spec, lam, {&x, 1}, {&u, 1}, {&out, 1});
    return out;
}

void phi0_inverse(const ProblemSpec& spec, std::span<const double> u, std::span<double> out) {
    const std::vector<double> x = spec.domain().sample_point();
    psi(spec, 0.0, x, u, out);
}

double phi0_inverse(const ProblemSpec& spec, double u) {
    double out = 0.0;
    phi0_inverse(spec, {&u, 1}, {&out, 1});
    return out;
}

double hadamard_h(const ProblemSpec& spec, double lam, double x, double u) {
    if (!(lam > 0.0)) throw NumericError(NumericError::Kind::Unsupported, "hadamard_h needs lam > 0");
    return (psi(spec, lam, x, u) - phi0_inverse(spec, u)) / lam;
}

void average_wind(const ProblemSpec& spec, std::span<const double> p, std::span<double> out) {
    const std::size_t n = spec.dim();
    const double T = spec.period();
    std::vector<double> cuts{0.0};
    cuts.insert(cuts.end(), spec.breakpoints().begin(), spec.breakpoints().end());
    cuts.push_back(T);
    const std::array<double, kMaxDim> zero{};
    for (std::size_t i = 0; i < n; ++i) {
        auto integrand = [&](double t) {
            std::array<double, kMaxDim> val{};
            spec.f(t, p, std::span<const double>(zero.data(), n), 0.0, std::span<double>(val.data(), n));
            require_finite(val[i], "f");
            return val[i];
        };
        double total = 0.0;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
            total += adaptive_simpson(integrand, cuts[c], cuts[c + 1], 1e-10, 1e-13);
        out[i] = total / T;
    }
}

double average_wind(const ProblemSpec& spec, double p) {
    double out = 0.0;
    average_wind(spec, {&p, 1}, {&out, 1});
    return out;
}

void gamma(const ProblemSpec& spec, std::span<const double> p, std::span<double> out) {
    if (spec.form() != Form::Autonomous)
        throw NumericError(NumericError::Kind::WrongForm, "gamma is only defined for the autonomous form");
    const std::array<double, kMaxDim> zero{};
    spec.g(p, std::span<const double>(zero.data(), spec.dim()), out);
}

double gamma(const ProblemSpec& spec, double p) {
    double out = 0.0;
    gamma(spec, {&p, 1}, {&out, 1});
    return out;
}

Diagnostic check_monotone(const ProblemSpec& spec, double lam_max) {
    Diagnostic d{"phi monotone in v", true, 0.0, ""};
    if (spec.dim() != 1) {
        d.detail = "skipped for n > 1";
        return d;
    }
    for (double lam : {0.0, 0.5 * lam_max, lam_max}) {
        for (double x : interior_samples(spec.domain(), 3)) {
            int dir = 0;
            double prev = spec.phi(lam, x, -10.0);
            for (int i = 1; i <= 400; ++i) {
                const double v = -10.0 + 20.0 * i / 400.0;
                const double cur = spec.phi(lam, x, v);
                const int s = cur > prev ? 1 : (cur < prev ? -1 : 0);
                if (s == 0 || (dir != 0 && s != dir) || !std::isfinite(cur)) {
                    d.passed = false;
                    d.worst = v;
                    d.detail = "not strictly monotone at lam=" + std::to_string(lam) + ", x=" + std::to_string(x) +
                               ", v=" + std::to_string(v);
                    return d;
                }
                dir = s;
                prev = cur;
            }
        }
    }
    return d;
}

Diagnostic check_phi0_independent(const ProblemSpec& spec) {
    Diagnostic d{"phi(0, x, v) independent of x", true, 0.0, ""};
    const std::size_t n = spec.dim();
    std::vector<std::vector<double>> xs;
    if (n == 1) {
        for (double x : interior_samples(spec.domain(), 3)) xs.push_back({x});
    } else {
        xs.push_back(spec.domain().sample_point());
        std::vector<double> other = xs.front();
        for (std::size_t i = 0; i < n; ++i) {
            const Interval& iv = spec.domain().intervals()[i];
            const double shifted = other[i] + 0.5;
            other[i] = iv.contains(shifted) ? shifted : 0.5 * (other[i] + (std::isfinite(iv.lo) ? iv.lo : other[i] - 1.0));
        }
        xs.push_back(other);
    }
    std::vector<double> v(n), a(n), b(n);
    for (int k = -8; k <= 8; ++k) {
        std::fill(v.begin(), v.end(), 0.75 * k);
        spec.phi(0.0, xs.front(), v, a);
        for (std::size_t j = 1; j < xs.size(); ++j) {
            spec.phi(0.0, xs[j], v, b);
            for (std::size_t i = 0; i < n; ++i) {
                const double gap = std::fabs(a[i] - b[i]);
                const double allowed = 1e-12 * (1.0 + std::fabs(a[i]));
                d.worst = std::max(d.worst, gap);
                if (gap > allowed) {
                    d.passed = false;
                    d.detail = "phi(0, x, v) changes with x";
                }
            }
        }
    }
    return d;
}

Diagnostic check_inversion(const ProblemSpec& spec, double lam_max) {
    Diagnostic d{"phi(lam, x, psi(lam, x, u)) = u", true, 0.0, ""};
    const std::size_t n = spec.dim();
    std::vector<std::vector<double>> xs;
    if (n == 1) {
        for (double x : interior_samples(spec.domain(), 2)) xs.push_back({x});
    } else {
        xs.push_back(spec.domain().sample_point());
    }
    std::vector<double> u(n), q(n), back(n);
    try {
        for (double lam : {0.0, 0.25 * lam_max, lam_max}) {
            for (const auto& x : xs) {
                for (int k = -10; k <= 10; ++k) {
                    std::fill(u.begin(), u.end(), 5.0 * k + 0.37);
                    psi(spec, lam, x, u, q);
                    spec.phi(lam, x, q, back);
                    for (std::size_t i = 0; i < n; ++i) {
                        const double rel = std::fabs(back[i] - u[i]) / (1.0 + std::fabs(u[i]));
                        d.worst = std::max(d.worst, rel);
                    }
                }
            }
        }
    } catch (const NumericError& e) {
        d.passed = false;
        d.detail = e.what();
        return d;
    }
    if (d.worst > 1e-10) {
        d.passed = false;
        d.detail = "inversion residual above 1e-10";
    }
    return d;
}

Diagnostic check_periodicity(const ProblemSpec& spec) {
    Diagnostic d{"f(t + T) = f(t)", true, 0.0, ""};
    const std::size_t n = spec.dim();
    const double T = spec.period();
    std::vector<double> x = spec.domain().sample_point();
    std::vector<double> v(n), a(n), b(n);
    for (int it = 0; it <= 36; ++it) {
        const double t = T * it / 36.0 + 0.013 * T;
        for (double vv : {-1.0, 0.0, 1.0}) {
            std::fill(v.begin(), v.end(), vv);
            for (double lam : {0.0, 1.0}) {
                spec.f(t, x, v, lam, a);
                spec.f(t + T, x, v, lam, b);
                for (std::size_t i = 0; i < n; ++i) d.worst = std::max(d.worst, std::fabs(a[i] - b[i]));
            }
        }
    }
    if (!(d.worst <= 1e-9)) {
        d.passed = false;
        d.detail = "f does not look T-periodic in t";
    }
    return d;
}

}  // namespace phibranch
