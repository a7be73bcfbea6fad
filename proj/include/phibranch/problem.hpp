#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phibranch/error.hpp"
#include "phibranch/expr.hpp"

namespace phibranch {

/// Largest supported state dimension n.
inline constexpr std::size_t kMaxDim = 8;

/// Which of the two equation families a problem belongs to.
///
///   lambda-perturbed:  [phi(lam, x, x')]' = lam f(t, x, x', lam)
///   autonomous:        [phi(lam, x, x')]' = g(x, x') + lam f(t, x, x', lam)
enum class Form { LambdaPerturbed, Autonomous };

std::string to_string(Form form);
Form form_from_string(const std::string& text);

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
    double lo;
    double hi;

    bool contains(double x) const noexcept { return lo < x && x < hi; }
    bool bounded() const noexcept;
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Open subset of R^n.
///
/// For n = 1 the domain is a finite union of disjoint open intervals, which
/// is how punctured lines such as R \ {0} are represented. For n > 1 it is
/// the open box with one interval per coordinate.
class Domain {
public:
    Domain();  // the real line
    Domain(std::vector<Interval> intervals, std::size_t dim);

    static Domain whole(std::size_t dim);

    /// Same domain with the given points removed (n = 1 only).
    Domain excluding(std::span<const double> points) const;

    bool contains(std::span<const double> x) const;
    bool contains(double x) const;

    /// Index of the interval holding x (n = 1), -1 when outside.
    int component(double x) const;

    /// A fixed interior point, preferring the origin.
    std::vector<double> sample_point() const;

    std::size_t dim() const noexcept { return dim_; }
    const std::vector<Interval>& intervals() const noexcept { return intervals_; }

private:
    std::vector<Interval> intervals_;
    std::size_t dim_ = 1;
};

/// The homeomorphism field phi(lam, x, v) and optionally its analytic
/// inverse psi(lam, x, u) in the velocity slot.
struct PhiMap {
    std::vector<Expr> phi;
    std::optional<std::vector<Expr>> psi;
    /// Sign of d phi / d v for numeric inversion; 0 detects it per query.
    int monotone_hint = 0;
};

/// Parameters of the numeric partial inverse (n = 1).
struct InverseOptions {
    double tolerance = 1e-10;   ///< required |phi(psi(u)) - u| / (1 + |u|)
    double growth = 2.0;        ///< bracket growth factor
    int max_expansions = 60;
    int max_iterations = 200;
};

/// Initial data (lam, p, v) of a T-periodic solution.
struct StartingPoint {
    double lam = 0.0;
    double p = 0.0;
    double v = 0.0;
};

/// A complete problem instance. Immutable after construction; every query is
/// pure and safe to call from several threads.
///
/// Expression variables: t, lam, x, v, u for n = 1; t, lam, x1..xn,
/// v1..vn, u1..un otherwise. phi and psi are functions of (lam, x, v) and
/// (lam, x, u), g of (x, v), f of (t, x, v, lam), k of (t, x).
class ProblemSpec {
public:
    ProblemSpec(std::string name, Form form, std::size_t n, double period, PhiMap phi,
                std::vector<Expr> g, std::vector<Expr> f, std::optional<std::vector<Expr>> k,
                Domain domain, std::vector<double> breakpoints = {});

    const std::string& name() const noexcept { return name_; }
    Form form() const noexcept { return form_; }
    std::size_t dim() const noexcept { return n_; }
    double period() const noexcept { return period_; }
    const PhiMap& phi_map() const noexcept { return phi_; }
    const std::vector<Expr>& g_exprs() const noexcept { return g_; }
    const std::vector<Expr>& f_exprs() const noexcept { return f_; }
    const std::optional<std::vector<Expr>>& k_exprs() const noexcept { return k_; }
    const Domain& domain() const noexcept { return domain_; }
    /// Interior times in (0, T) where f or k may jump; sorted.
    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    bool has_k() const noexcept { return k_.has_value(); }
    const InverseOptions& inverse_options() const noexcept { return inverse_; }

    /// Variable layout shared by every bound expression.
    const std::vector<std::string>& slots() const noexcept { return slots_; }

    void phi(double lam, std::span<const double> x, std::span<const double> v, std::span<double> out) const;
    void g(std::span<const double> x, std::span<const double> v, std::span<double> out) const;
    void f(double t, std::span<const double> x, std::span<const double> v, double lam, std::span<double> out) const;
    /// k(t, x); zero when the problem has no k term.
    void k(double t, std::span<const double> x, std::span<double> out) const;
    /// Analytic psi; only valid when phi_map().psi is set.
    void psi_analytic(double lam, std::span<const double> x, std::span<const double> u, std::span<double> out) const;
    bool has_analytic_psi() const noexcept { return !psi_bound_.empty(); }

    // Scalar conveniences for n = 1.
    double phi(double lam, double x, double v) const;
    double g(double x, double v) const;
    double f(double t, double x, double v, double lam) const;
    double k(double t, double x) const;

private:
    using Slots = std::array<double, 2 + 3 * kMaxDim>;
    void load(Slots& s, double t, double lam, std::span<const double> x, std::span<const double> v,
              std::span<const double> u) const;

    std::string name_;
    Form form_;
    std::size_t n_;
    double period_;
    PhiMap phi_;
    std::vector<Expr> g_;
    std::vector<Expr> f_;
    std::optional<std::vector<Expr>> k_;
    Domain domain_;
    std::vector<double> breakpoints_;
    InverseOptions inverse_;

    std::vector<std::string> slots_;
    std::vector<BoundExpr> phi_bound_;
    std::vector<BoundExpr> psi_bound_;
    std::vector<BoundExpr> g_bound_;
    std::vector<BoundExpr> f_bound_;
    std::vector<BoundExpr> k_bound_;
};

/// Variable names for dimension n: {t, lam, x.., v.., u..}.
std::vector<std::string> variable_slots(std::size_t n);

/// Partial inverse: q with phi(lam, x, q) = u.
///
/// Uses the analytic psi when the problem supplies one; otherwise (n = 1)
/// brackets the root starting from half-width 1 + |u|, doubling, and polishes
/// it with Newton steps on a central-difference slope, falling back to
/// bisection whenever a step leaves the bracket.
void psi(const ProblemSpec& spec, double lam, std::span<const double> x, std::span<const double> u,
         std::span<double> out);
double psi(const ProblemSpec& spec, double lam, double x, double u);

/// phi_0^{-1}(u) = psi(0, x, u) for any x in the domain.
double phi0_inverse(const ProblemSpec& spec, double u);
void phi0_inverse(const ProblemSpec& spec, std::span<const double> u, std::span<double> out);

/// h(lam, x, u) = (psi(lam, x, u) - phi_0^{-1}(u)) / lam, for lam > 0.
double hadamard_h(const ProblemSpec& spec, double lam, double x, double u);

/// Average wind w(p) = (1/T) * integral_0^T f(t, p, 0, 0) dt.
void average_wind(const ProblemSpec& spec, std::span<const double> p, std::span<double> out);
double average_wind(const ProblemSpec& spec, double p);

/// gamma(p) = g(p, 0); autonomous form only.
void gamma(const ProblemSpec& spec, std::span<const double> p, std::span<double> out);
double gamma(const ProblemSpec& spec, double p);

/// Adaptive Simpson quadrature on [a, b]: relative tolerance rel_tol with an
/// absolute floor abs_floor.
template <class F>
double adaptive_simpson(F&& fn, double a, double b, double rel_tol, double abs_floor);

/// Outcome of a configuration sanity check.
struct Diagnostic {
    std::string name;
    bool passed = true;
    double worst = 0.0;  ///< worst observed violation
    std::string detail;
};

/// v -> phi(lam, x, v) strictly monotone on a sample grid (n = 1).
Diagnostic check_monotone(const ProblemSpec& spec, double lam_max);
/// phi(0, x, v) independent of x.
Diagnostic check_phi0_independent(const ProblemSpec& spec);
/// phi(lam, x, psi(lam, x, u)) = u on a sample grid.
Diagnostic check_inversion(const ProblemSpec& spec, double lam_max);
/// |f(t + T, .) - f(t, .)| <= 1e-9 on samples.
Diagnostic check_periodicity(const ProblemSpec& spec);

}  // namespace phibranch

#include "phibranch/detail/quadrature.hpp"
