#include "phibranch/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "phibranch/config.hpp"
#include "phibranch/continuation.hpp"
#include "phibranch/degree.hpp"
#include "phibranch/parallel.hpp"

namespace phibranch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v, int digits = 10) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::vector<double> split_numbers(const std::string& text, char sep) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw ConfigError("empty number in '" + text + "'");
        item = item.substr(b, e - b + 1);
        if (item == "inf" || item == "+inf") {
            out.push_back(kInf);
            continue;
        }
        if (item == "-inf") {
            out.push_back(-kInf);
            continue;
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw ConfigError("not a number: '" + item + "'");
        out.push_back(v);
    }
    return out;
}

Box parse_box(const std::string& text) {
    const auto v = split_numbers(text, ',');
    if (v.size() != 4 || !(v[0] < v[1] && v[2] < v[3]))
        throw ConfigError("--box expects p_lo,p_hi,v_lo,v_hi with lo < hi");
    return {v[0], v[1], v[2], v[3]};
}

/// Problem selection shared by all subcommands.
struct ProblemArgs {
    std::string example;
    std::string problem;

    void attach(CLI::App* app) {
        auto* ex = app->add_option("--example", example, "Builtin example id (ex1, ex2, ex3, ex4)");
        auto* pr = app->add_option("--problem", problem, "Problem configuration file (JSON)");
        ex->excludes(pr);
    }

    ProblemConfig load() const {
        if (!example.empty()) return builtin_example(example);
        if (!problem.empty()) return load_problem_file(problem);
        throw ConfigError("one of --example or --problem is required");
    }
};

struct Zeroed {
    VectorField field;
    std::string label;
};

Zeroed hypothesis_field(const ProblemSpec& spec) {
    if (spec.form() == Form::Autonomous) return {gamma_field(spec), "gamma"};
    return {wind_field(spec), "w"};
}

/// Intervals isolating each zero of a scalar field inside each domain
/// component: cuts at midpoints between neighbouring zeros.
std::vector<std::pair<double, Interval>> isolating_intervals(const VectorField& field, const Domain& domain) {
    std::vector<std::pair<double, Interval>> out;
    for (const Interval& iv : domain.intervals()) {
        const DegreeResult all = degree_1d(field, Domain({iv}, 1));
        std::vector<double> zs;
        for (const DegreeZero& z : all.zeros) zs.push_back(z.point[0]);
        for (std::size_t i = 0; i < zs.size(); ++i) {
            const double lo = i == 0 ? iv.lo : 0.5 * (zs[i - 1] + zs[i]);
            const double hi = i + 1 == zs.size() ? iv.hi : 0.5 * (zs[i] + zs[i + 1]);
            out.push_back({zs[i], {lo, hi}});
        }
    }
    return out;
}

std::string interval_text(const Interval& iv) {
    return "(" + fmt(iv.lo) + ", " + fmt(iv.hi) + ")";
}

std::string domain_text(const Domain& d) {
    std::string s;
    for (const Interval& iv : d.intervals()) s += (s.empty() ? "" : " u ") + interval_text(iv);
    return s;
}

void print_degree(std::ostream& out, const DegreeResult& r) {
    out << "degree: " << r.degree << "\n";
    out << "zeros: " << r.zeros.size() << "\n";
    for (const DegreeZero& z : r.zeros) {
        out << "  at (";
        for (std::size_t i = 0; i < z.point.size(); ++i) out << (i ? ", " : "") << fmt(z.point[i], 12);
        out << ")  sign " << (z.sign > 0 ? "+1" : z.sign < 0 ? "-1" : "0") << "  det " << fmt(z.det, 6) << "\n";
    }
    out << "admissible: " << (r.admissible ? "yes" : "no") << "\n";
    out << "margin: " << (std::isfinite(r.margin) ? fmt(r.margin, 6) : std::string("inf")) << "\n";
    out << "evidence: " << r.evidence << "\n";
}

int cmd_examples(std::ostream& out) {
    for (const std::string& id : builtin_ids()) {
        const ProblemConfig cfg = builtin_example(id);
        const auto& src = cfg.source;
        out << id << ": [" << src["phi"].get<std::string>() << "]' = ";
        if (src.contains("g")) out << src["g"].get<std::string>() << " + ";
        out << "lam (" << src["f"].get<std::string>() << "), T = " << fmt(cfg.spec.period()) << "\n";
    }
    return kExitOk;
}

int cmd_verify(const ProblemConfig& cfg, std::optional<double> lam_max_flag, std::ostream& out) {
    const ProblemSpec& spec = cfg.spec;
    const double lam_max = lam_max_flag.value_or(cfg.run.lam_max);
    out << "problem: " << spec.name() << "\n";
    out << "config:\n" << cfg.source.dump(2) << "\n";
    out << "form: " << to_string(spec.form()) << ", n = " << spec.dim() << ", T = " << fmt(spec.period(), 17)
        << "\n";
    out << "domain: " << domain_text(spec.domain()) << "\n";

    bool ok = true;
    for (const Diagnostic& d : {check_monotone(spec, lam_max), check_phi0_independent(spec),
                                check_inversion(spec, lam_max), check_periodicity(spec)}) {
        out << (d.passed ? "PASS " : "FAIL ") << d.name << "  worst " << fmt(d.worst, 3);
        if (!d.detail.empty()) out << "  (" << d.detail << ")";
        out << "\n";
        ok = ok && d.passed;
    }

    if (spec.dim() == 1) {
        const Zeroed hf = hypothesis_field(spec);
        try {
            const DegreeResult whole = degree_1d(hf.field, spec.domain());
            out << "deg(" << hf.label << ", " << domain_text(spec.domain()) << ") = " << whole.degree << "\n";
            const auto parts = isolating_intervals(hf.field, spec.domain());
            out << hf.label << " zeros: " << parts.size() << "\n";
            for (const auto& [z, iv] : parts) {
                const DegreeResult local = degree_1d(hf.field, Domain({iv}, 1));
                out << "  zero at " << fmt(z, 12) << "  deg on " << interval_text(iv) << " = " << local.degree
                    << "\n";
            }
        } catch (const NumericError& e) {
            out << "FAIL " << hf.label << " degree: " << e.what() << "\n";
            ok = false;
        }
    } else {
        out << "zero scan skipped for n > 1\n";
    }
    out << (ok ? "verify: ok" : "verify: diagnostics failed") << "\n";
    return ok ? kExitOk : kExitDiagnostic;
}

int cmd_degree(const ProblemConfig& cfg, const std::string& field_name, const std::string& domain_arg,
               const std::string& exclude_arg, std::ostream& out, std::ostream& err) {
    const ProblemSpec& spec = cfg.spec;
    VectorField field;
    if (field_name == "gamma") {
        field = gamma_field(spec);
    } else if (field_name == "w") {
        field = wind_field(spec);
    } else {
        throw ConfigError("--field must be gamma or w");
    }
    if (spec.dim() != 1) throw ConfigError("degree is implemented for n = 1 problems");
    Domain domain = domain_arg.empty() ? spec.domain() : parse_domain_text(domain_arg);
    if (!exclude_arg.empty()) {
        const auto pts = split_numbers(exclude_arg, ',');
        domain = domain.excluding(pts);
    }
    out << "field: " << field.name << "\n";
    out << "domain: " << domain_text(domain) << "\n";
    try {
        const DegreeResult r = degree_1d(field, domain);
        print_degree(out, r);
        if (r.degree == 0) {
            out << "hypothesis fails: degree is zero\n";
            return kExitDiagnostic;
        }
        return kExitOk;
    } catch (const NumericError& e) {
        out << "degree: undefined\nadmissible: no\n";
        err << "error: " << e.what() << "\n";
        return kExitDiagnostic;
    }
}

std::filesystem::path prepare_dir(const std::string& dir) {
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

std::string number_tag(double v) {
    std::string s = fmt(v, 6);
    for (char& c : s)
        if (c == '-') c = 'm';
    return s;
}

int cmd_shoot(const ProblemConfig& cfg, double lam, const std::string& box_arg, std::optional<std::size_t> grid,
              std::optional<double> tol, const std::string& out_dir, std::ostream& out) {
    const Box box = !box_arg.empty() ? parse_box(box_arg)
                    : cfg.run.box   ? *cfg.run.box
                                    : throw ConfigError("no box: pass --box or set run.box in the problem");
    ShootOptions so;
    so.integration.tol = tol.value_or(cfg.run.tol);
    const std::size_t m = grid.value_or(cfg.run.grid);
    if (lam < 0.0) throw ConfigError("--lam must be non-negative");
    const GridScanReport rep = grid_scan(cfg.spec, lam, box, m, so);

    std::ostringstream csv;
    csv << "lambda,p,v,c1norm,diam,residual\n";
    char buf[256];
    for (const PeriodicOrbit& o : rep.orbits) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", o.start.lam, o.start.p, o.start.v,
                      o.c1norm, o.diam, o.residual);
        csv << buf;
    }
    if (out_dir.empty()) {
        out << csv.str();
    } else {
        const auto path = prepare_dir(out_dir) / ("shoot_" + cfg.spec.name() + "_lam" + number_tag(lam) + ".csv");
        std::ofstream f(path);
        f << csv.str();
        out << "orbits: " << rep.orbits.size() << " (seeds " << rep.seeds << ", converged " << rep.converged
            << ", failed " << rep.failed << ", outside box " << rep.outside_box << ")\n";
        out << "wrote " << path.string() << "\n";
    }
    return kExitOk;
}

int cmd_continue(const ProblemConfig& cfg, std::vector<double> seeds, std::optional<double> lam_max,
                 std::optional<double> smax, std::optional<double> tol, const std::string& out_dir,
                 std::ostream& out, std::ostream& err) {
    if (seeds.empty()) seeds = cfg.run.seeds;
    if (seeds.empty()) throw ConfigError("no seeds: pass --seed or set run.seeds in the problem");
    TraceOptions to;
    to.h0 = cfg.run.h0;
    to.hmin = cfg.run.hmin;
    to.hmax = cfg.run.hmax;
    to.state_bound = cfg.run.state_bound;
    to.lam_max = lam_max.value_or(cfg.run.lam_max);
    to.smax = smax.value_or(cfg.run.smax);
    to.shoot.integration.tol = tol.value_or(cfg.run.tol);

    struct Outcome {
        std::optional<Branch> branch;
        std::string error;
    };
    std::vector<Outcome> results(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        try {
            results[i].branch = trace(cfg.spec, seeds[i], to);
        } catch (const NumericError& e) {
            results[i].error = e.what();
        }
    });

    const auto dir = prepare_dir(out_dir);
    bool ok = true;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        out << "seed " << fmt(seeds[i]) << ": ";
        if (!results[i].branch) {
            out << "rejected\n";
            err << "error: seed " << fmt(seeds[i]) << ": " << results[i].error << "\n";
            ok = false;
            continue;
        }
        const Branch& b = *results[i].branch;
        const auto path = dir / ("branch_" + cfg.spec.name() + "_seed" + number_tag(seeds[i]) + ".csv");
        std::ofstream f(path);
        write_branch_csv(f, b);
        double lo = kInf, hi = -kInf;
        for (const BranchPoint& p : b.points) {
            lo = std::min(lo, p.point.lam);
            hi = std::max(hi, p.point.lam);
        }
        out << "termination " << to_string(b.termination) << " (" << b.message << "), points " << b.points.size()
            << ", arclength " << fmt(b.points.back().s, 6) << ", lambda range [" << fmt(lo, 6) << ", "
            << fmt(hi, 6) << "]\n";
        out << "  folds: " << b.folds.size();
        for (double lf : b.fold_lambdas) out << "  lambda=" << fmt(lf, 8);
        out << "\n  wrote " << path.string() << "\n";
    }
    return ok ? kExitOk : kExitDiagnostic;
}

}  // namespace

Domain parse_domain_text(const std::string& text) {
    if (text == "R" || text == "r" || text == "real") return Domain();
    std::vector<Interval> parts;
    std::stringstream ss(text);
    std::string piece;
    while (std::getline(ss, piece, ';')) {
        const auto v = split_numbers(piece, ',');
        if (v.size() != 2) throw ConfigError("domain pieces are lo,hi pairs separated by ';'");
        parts.push_back({v[0], v[1]});
    }
    if (parts.empty()) throw ConfigError("empty domain");
    return Domain(std::move(parts), 1);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Branches of periodic solutions of parametric phi-Laplacian equations", "phibranch"};
    app.require_subcommand(1);

    ProblemArgs verify_args, degree_args, shoot_args, continue_args;
    std::optional<double> verify_lam_max;
    std::string degree_field = "gamma", degree_domain, degree_exclude;
    double shoot_lam = 0.0;
    std::string shoot_box, shoot_out;
    std::optional<std::size_t> shoot_grid;
    std::optional<double> shoot_tol;
    std::vector<double> cont_seeds;
    std::optional<double> cont_lam_max, cont_smax, cont_tol;
    std::string cont_out = "phibranch-out";

    auto* examples = app.add_subcommand("examples", "List the builtin examples");

    auto* verify = app.add_subcommand("verify", "Echo a problem and run its diagnostics");
    verify_args.attach(verify);
    verify->add_option("--lam-max", verify_lam_max, "Largest lambda sampled by the diagnostics");

    auto* degree = app.add_subcommand("degree", "Brouwer degree of gamma or w on a domain");
    degree_args.attach(degree);
    degree->add_option("--field", degree_field, "gamma or w")->check(CLI::IsMember({"gamma", "w"}));
    degree->add_option("--domain", degree_domain, "R, lo,hi or lo,hi;lo,hi;... (inf allowed)");
    degree->add_option("--exclude", degree_exclude, "Points removed from the domain, comma separated");

    auto* shoot = app.add_subcommand("shoot", "Periodic orbits at fixed lambda from a grid of Newton seeds");
    shoot_args.attach(shoot);
    shoot->add_option("--lam", shoot_lam, "Parameter value")->required();
    shoot->add_option("--box", shoot_box, "p_lo,p_hi,v_lo,v_hi");
    shoot->add_option("--grid", shoot_grid, "Seeds per axis");
    shoot->add_option("--tol", shoot_tol, "Integration tolerance");
    shoot->add_option("--out-dir", shoot_out, "Write the CSV here instead of standard output");

    auto* cont = app.add_subcommand("continue", "Trace branches from trivial periodic solutions");
    continue_args.attach(cont);
    cont->add_option("--seed", cont_seeds, "Zero of gamma (or w) to start from; repeatable");
    cont->add_option("--lam-max", cont_lam_max, "Stop at this lambda");
    cont->add_option("--smax", cont_smax, "Arclength budget");
    cont->add_option("--tol", cont_tol, "Integration tolerance");
    cont->add_option("--out-dir", cont_out, "Directory for branch CSV files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (examples->parsed()) return cmd_examples(out);
        if (verify->parsed()) return cmd_verify(verify_args.load(), verify_lam_max, out);
        if (degree->parsed())
            return cmd_degree(degree_args.load(), degree_field, degree_domain, degree_exclude, out, err);
        if (shoot->parsed())
            return cmd_shoot(shoot_args.load(), shoot_lam, shoot_box, shoot_grid, shoot_tol, shoot_out, out);
        if (cont->parsed())
            return cmd_continue(continue_args.load(), cont_seeds, cont_lam_max, cont_smax, cont_tol, cont_out, out,
                                err);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << "\n";
        return kExitDiagnostic;
    }
    return kExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.push_back("phibranch");
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace phibranch
