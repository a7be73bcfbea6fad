#include "phibranch/degree.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "phibranch/linalg.hpp"

namespace phibranch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEndpointZero = 1e-12;
constexpr double kMaxRadius = 1e6;
constexpr std::size_t kScanPoints = 1024;

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

double eval1(const VectorField& field, double x) {
    const double v = field(x);
    if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << field.name << " is not finite at " << x;
        throw NumericError(NumericError::Kind::NonFinite, msg.str());
    }
    return v;
}

double slope1(const VectorField& field, double x) {
    const double h = 6e-6 * (1.0 + std::fabs(x));
    return (field(x + h) - field(x - h)) / (2.0 * h);
}

/// Truncation point for an infinite end: center + dir * r with the smallest
/// doubling radius r beyond which the sampled sign no longer changes.
struct EndSign {
    double point;
    int sign;
};

EndSign sign_at_infinity(const VectorField& field, double center, int dir) {
    std::vector<double> xs;
    std::vector<int> signs;
    for (double r = 1.0; r <= kMaxRadius * 1.0000001; r *= 2.0) {
        const double x = center + dir * r;
        xs.push_back(x);
        signs.push_back(sign_of(eval1(field, x)));
    }
    const double far = center + dir * kMaxRadius;
    xs.push_back(far);
    signs.push_back(sign_of(eval1(field, far)));
    const int s = signs.back();
    const std::size_t tail = 4;
    bool steady = s != 0;
    for (std::size_t i = signs.size() - tail; i < signs.size(); ++i) steady = steady && signs[i] == s;
    if (!steady) {
        std::ostringstream msg;
        msg << "sign of " << field.name << " at " << (dir > 0 ? "+" : "-") << "infinity is undetermined";
        throw NumericError(NumericError::Kind::Undetermined, msg.str());
    }
    std::size_t first = signs.size() - 1;
    while (first > 0 && signs[first - 1] == s) --first;
    return {xs[first], s};
}

/// Sign changes on a uniform scan of [lo, hi], refined by bisection.
std::vector<DegreeZero> scan_zeros(const VectorField& field, double lo, double hi) {
    std::vector<DegreeZero> zeros;
    double prev_x = lo;
    int prev_s = sign_of(field(lo));
    for (std::size_t i = 1; i <= kScanPoints; ++i) {
        const double x = i == kScanPoints ? hi : lo + (hi - lo) * static_cast<double>(i) / kScanPoints;
        const int s = sign_of(field(x));
        if (s == 0) continue;
        if (prev_s != 0 && s != prev_s) {
            double a = prev_x, b = x;
            for (int it = 0; it < 200 && b - a > 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(a)); ++it) {
                const double mid = 0.5 * (a + b);
                const int sm = sign_of(field(mid));
                if (sm == 0) {
                    a = b = mid;
                    break;
                }
                (sm == prev_s ? a : b) = mid;
            }
            const double z = 0.5 * (a + b);
            const double d = slope1(field, z);
            zeros.push_back({{z}, sign_of(d), d});
        }
        prev_x = x;
        prev_s = s;
    }
    return zeros;
}

double boundary_distance(double z, const Interval& iv) {
    double d = kInf;
    if (std::isfinite(iv.lo)) d = std::min(d, z - iv.lo);
    if (std::isfinite(iv.hi)) d = std::min(d, iv.hi - z);
    return d;
}

template <std::size_t N>
Vector<N> eval_n(const VectorField& field, const Vector<N>& z) {
    Vector<N> out{};
    field.eval(z, out);
    return out;
}

template <std::size_t N>
Matrix<N> jacobian(const VectorField& field, const Vector<N>& z) {
    Matrix<N> jac{};
    for (std::size_t j = 0; j < N; ++j) {
        const double h = 6e-6 * (1.0 + std::fabs(z[j]));
        Vector<N> zp = z, zm = z;
        zp[j] += h;
        zm[j] -= h;
        const Vector<N> fp = eval_n(field, zp), fm = eval_n(field, zm);
        for (std::size_t i = 0; i < N; ++i) jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
    }
    return jac;
}

template <std::size_t N>
std::optional<Vector<N>> newton_zero(const VectorField& field, Vector<N> z, std::span<const Interval> box,
                                     int max_iterations) {
    Vector<N> fz = eval_n(field, z);
    for (int it = 0; it < max_iterations; ++it) {
        if (!std::isfinite(max_norm(fz))) return std::nullopt;
        if (max_norm(fz) == 0.0) break;
        const auto step = solve(jacobian(field, z), fz);
        if (!step) return std::nullopt;
        double damping = 1.0;
        Vector<N> trial{}, ft{};
        for (int h = 0; h < 12; ++h) {
            for (std::size_t i = 0; i < N; ++i) trial[i] = z[i] - damping * (*step)[i];
            ft = eval_n(field, trial);
            if (max_norm(ft) < max_norm(fz)) break;
            damping *= 0.5;
        }
        const double moved = damping * max_norm(*step);
        z = trial;
        fz = ft;
        for (std::size_t i = 0; i < N; ++i) {
            const double width = box[i].hi - box[i].lo;
            if (z[i] < box[i].lo - 0.5 * width || z[i] > box[i].hi + 0.5 * width) return std::nullopt;
        }
        if (moved <= 1e-14 * (1.0 + max_norm(z))) break;
    }
    if (!(max_norm(fz) <= 1e-10)) return std::nullopt;
    return z;
}

template <std::size_t N>
DegreeResult regular_impl(const VectorField& field, std::span<const Interval> box, std::size_t m,
                          const RegularOptions& opts) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < N; ++i) total *= m;
    std::vector<Vector<N>> found;
    for (std::size_t idx = 0; idx < total; ++idx) {
        Vector<N> seed{};
        std::size_t rest = idx;
        for (std::size_t i = 0; i < N; ++i) {
            const double k = static_cast<double>(rest % m) + 0.5;
            rest /= m;
            seed[i] = box[i].lo + (box[i].hi - box[i].lo) * k / static_cast<double>(m);
        }
        const auto z = newton_zero(field, seed, box, opts.max_iterations);
        if (!z) continue;
        const bool duplicate = std::any_of(found.begin(), found.end(), [&](const Vector<N>& o) {
            Vector<N> d{};
            for (std::size_t i = 0; i < N; ++i) d[i] = o[i] - (*z)[i];
            return max_norm(d) < opts.dedup_tol;
        });
        if (!duplicate) found.push_back(*z);
    }
    std::sort(found.begin(), found.end());

    DegreeResult out;
    out.margin = kInf;
    out.scanned.assign(box.begin(), box.end());
    std::ostringstream ev;
    for (const Vector<N>& z : found) {
        double dist = kInf;
        bool inside = true;
        for (std::size_t i = 0; i < N; ++i) {
            inside = inside && box[i].contains(z[i]);
            dist = std::min({dist, std::fabs(z[i] - box[i].lo), std::fabs(box[i].hi - z[i])});
        }
        if (dist < opts.margin) {
            std::ostringstream msg;
            msg << field.name << " has a zero within " << dist << " of the boundary; the box is not admissible";
            throw NumericError(NumericError::Kind::Inadmissible, msg.str());
        }
        if (!inside) continue;
        const double det = determinant(jacobian(field, z));
        if (!(std::fabs(det) >= opts.min_det)) {
            std::ostringstream msg;
            msg << field.name << " has a degenerate zero (|det| = " << std::fabs(det)
                << "); replace F by F - q for a small regular value q";
            throw NumericError(NumericError::Kind::Degenerate, msg.str());
        }
        out.zeros.push_back({std::vector<double>(z.begin(), z.end()), sign_of(det), det});
        out.degree += sign_of(det);
        out.margin = std::min(out.margin, dist);
    }
    ev << out.zeros.size() << " zero(s) from " << total << " seeds";
    out.evidence = ev.str();
    return out;
}

}  // namespace

double VectorField::operator()(double p) const {
    double out = 0.0;
    eval({&p, 1}, {&out, 1});
    return out;
}

VectorField VectorField::scalar(std::function<double(double)> fn, std::string name) {
    return {1, [fn = std::move(fn)](std::span<const double> p, std::span<double> out) { out[0] = fn(p[0]); },
            std::move(name)};
}

VectorField gamma_field(const ProblemSpec& spec) {
    if (spec.form() != Form::Autonomous)
        throw NumericError(NumericError::Kind::WrongForm, "gamma is only defined for the autonomous form");
    return {spec.dim(), [&spec](std::span<const double> p, std::span<double> out) { gamma(spec, p, out); }, "gamma"};
}

VectorField wind_field(const ProblemSpec& spec) {
    return {spec.dim(), [&spec](std::span<const double> p, std::span<double> out) { average_wind(spec, p, out); },
            "w"};
}

VectorField product_gamma_field(const ProblemSpec& spec) {
    if (spec.dim() != 1) throw NumericError(NumericError::Kind::Unsupported, "product fields need n = 1");
    if (spec.form() != Form::Autonomous)
        throw NumericError(NumericError::Kind::WrongForm, "G is only defined for the autonomous form");
    return {2,
            [&spec](std::span<const double> z, std::span<double> out) {
                const double q = phi0_inverse(spec, z[1]);
                out[0] = q;
                out[1] = spec.g(z[0], q);
            },
            "G"};
}

VectorField product_wind_field(const ProblemSpec& spec) {
    if (spec.dim() != 1) throw NumericError(NumericError::Kind::Unsupported, "product fields need n = 1");
    return {2,
            [&spec](std::span<const double> z, std::span<double> out) {
                const double q = phi0_inverse(spec, z[1]);
                const double p = z[0];
                std::vector<double> cuts{0.0};
                cuts.insert(cuts.end(), spec.breakpoints().begin(), spec.breakpoints().end());
                cuts.push_back(spec.period());
                double total = 0.0;
                for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
                    total += adaptive_simpson([&](double t) { return spec.f(t, p, q, 0.0); }, cuts[c], cuts[c + 1],
                                              1e-10, 1e-13);
                out[0] = total / spec.period();
                out[1] = q;
            },
            "nu"};
}

DegreeResult degree_1d(const VectorField& field, Interval interval) {
    if (field.dim != 1) throw NumericError(NumericError::Kind::Unsupported, "degree_1d needs a scalar field");
    if (!(interval.lo < interval.hi)) throw NumericError(NumericError::Kind::Unsupported, "empty interval");
    const double center = std::isfinite(interval.lo)   ? (std::isfinite(interval.hi) ? 0.0 : interval.lo)
                          : std::isfinite(interval.hi) ? interval.hi
                                                       : 0.0;
    auto finite_end = [&](double x) {
        const double v = eval1(field, x);
        if (std::fabs(v) <= kEndpointZero) {
            std::ostringstream msg;
            msg << field.name << " vanishes at the endpoint " << x << "; the interval is not admissible";
            throw NumericError(NumericError::Kind::Inadmissible, msg.str());
        }
        return EndSign{x, sign_of(v)};
    };
    const EndSign left = std::isfinite(interval.lo) ? finite_end(interval.lo) : sign_at_infinity(field, center, -1);
    const EndSign right = std::isfinite(interval.hi) ? finite_end(interval.hi) : sign_at_infinity(field, center, +1);

    DegreeResult out;
    out.degree = (right.sign - left.sign) / 2;
    // A truncation point may land outside a half-infinite interval when the
    // finite end already fixes the sign; clamp the scan to the interval.
    const double lo = std::max(left.point, std::isfinite(interval.lo) ? interval.lo : -kInf);
    const double hi = std::min(right.point, std::isfinite(interval.hi) ? interval.hi : kInf);
    out.scanned.push_back({lo, hi});
    out.margin = kInf;
    if (lo < hi) out.zeros = scan_zeros(field, lo, hi);
    for (const DegreeZero& z : out.zeros) out.margin = std::min(out.margin, boundary_distance(z.point[0], interval));
    std::ostringstream ev;
    ev << "sign " << left.sign << " at " << left.point << ", sign " << right.sign << " at " << right.point << ", "
       << out.zeros.size() << " simple zero(s) on the scan";
    out.evidence = ev.str();
    return out;
}

DegreeResult degree_1d(const VectorField& field, const Domain& domain) {
    if (domain.dim() != 1) throw NumericError(NumericError::Kind::Unsupported, "degree_1d needs a domain in R");
    DegreeResult total;
    total.margin = kInf;
    std::ostringstream ev;
    for (const Interval& iv : domain.intervals()) {
        Interval inner = iv;
        // Step off finite ends where the field vanishes: the zero is not in
        // the open set, and the sign just inside decides the degree.
        auto step_in = [&](double end, int dir) {
            if (!std::isfinite(end) || std::fabs(eval1(field, end)) > kEndpointZero) return end;
            const double width = std::isfinite(iv.hi - iv.lo) ? iv.hi - iv.lo : 1.0;
            const double eps = std::min(1e-6 * (1.0 + std::fabs(end)), 1e-3 * width);
            const double x = end + dir * eps;
            if (std::fabs(eval1(field, x)) <= kEndpointZero) {
                std::ostringstream msg;
                msg << field.name << " does not have an isolated zero at the boundary point " << end;
                throw NumericError(NumericError::Kind::Inadmissible, msg.str());
            }
            return x;
        };
        inner.lo = step_in(iv.lo, +1);
        inner.hi = step_in(iv.hi, -1);
        DegreeResult part = degree_1d(field, inner);
        total.degree += part.degree;
        for (DegreeZero& z : part.zeros) {
            total.margin = std::min(total.margin, boundary_distance(z.point[0], iv));
            total.zeros.push_back(std::move(z));
        }
        total.scanned.insert(total.scanned.end(), part.scanned.begin(), part.scanned.end());
        if (ev.tellp() > 0) ev << "; ";
        ev << "(" << iv.lo << ", " << iv.hi << "): " << part.degree;
    }
    total.evidence = ev.str();
    return total;
}

DegreeResult degree_regular(const VectorField& field, std::span<const Interval> box, std::size_t m,
                            const RegularOptions& opts) {
    if (box.size() != field.dim) throw NumericError(NumericError::Kind::Unsupported, "box dimension mismatch");
    if (m < 1) throw NumericError(NumericError::Kind::Unsupported, "degree_regular needs m >= 1");
    for (const Interval& iv : box)
        if (!iv.bounded() || !(iv.lo < iv.hi))
            throw NumericError(NumericError::Kind::Unsupported, "degree_regular needs a bounded box");
    switch (field.dim) {
        case 1: return regular_impl<1>(field, box, m, opts);
        case 2: return regular_impl<2>(field, box, m, opts);
        case 3: return regular_impl<3>(field, box, m, opts);
        default: throw NumericError(NumericError::Kind::Unsupported, "degree_regular supports s <= 3");
    }
}

ReducedDegreeReport reduced_degree_check(const ProblemSpec& spec, Interval w_set, std::size_t m) {
    if (spec.dim() != 1) throw NumericError(NumericError::Kind::Unsupported, "reduced_degree_check needs n = 1");
    const bool autonomous = spec.form() == Form::Autonomous;
    const VectorField reduced = autonomous ? gamma_field(spec) : wind_field(spec);
    const VectorField product = autonomous ? product_gamma_field(spec) : product_wind_field(spec);

    ReducedDegreeReport rep;
    rep.reduced_name = reduced.name;
    rep.product_name = product.name;
    rep.reduced = degree_1d(reduced, w_set);
    rep.reduced_degree = rep.reduced.degree;

    double R = 1.0;
    while (!(phi0_inverse(spec, -R) < 0.0 && phi0_inverse(spec, R) > 0.0)) {
        R *= 2.0;
        if (R > kMaxRadius) throw NumericError(NumericError::Kind::Undetermined, "phi0^{-1} does not change sign");
    }
    rep.u_range = R;
    // The zero of phi0^{-1} is phi0(0).
    const double u0 = spec.phi(0.0, 0.0, 0.0);
    const double h = 1e-6 * (1.0 + std::fabs(u0));
    rep.inverse_slope_sign = sign_of(phi0_inverse(spec, u0 + h) - phi0_inverse(spec, u0 - h));

    // Pad the truncated p-range so zeros stay clear of its edges.
    const Interval p_range = rep.reduced.scanned.front();
    const double pad = std::isfinite(w_set.lo) && std::isfinite(w_set.hi) ? 0.0 : 1.0;
    const std::array<Interval, 2> box{Interval{std::isfinite(w_set.lo) ? w_set.lo : p_range.lo - pad,
                                               std::isfinite(w_set.hi) ? w_set.hi : p_range.hi + pad},
                                      Interval{-R, R}};
    rep.product = degree_regular(product, box, m);
    rep.product_degree = rep.product.degree;
    rep.magnitudes_equal = std::abs(rep.product_degree) == std::abs(rep.reduced_degree);
    return rep;
}

}  // namespace phibranch
