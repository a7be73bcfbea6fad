#include "phibranch/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace phibranch {

using nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Expr> parse_components(const ordered_json& value, std::size_t n, const char* key) {
    std::vector<std::string> texts;
    if (value.is_string()) {
        texts.push_back(value.get<std::string>());
    } else if (value.is_array()) {
        for (const auto& item : value) {
            if (!item.is_string()) throw ConfigError(std::string(key) + ": components must be formula strings");
            texts.push_back(item.get<std::string>());
        }
    } else {
        throw ConfigError(std::string(key) + ": expected a formula string or a list of them");
    }
    if (texts.size() != n) throw ConfigError(std::string(key) + ": expected " + std::to_string(n) + " component(s)");
    std::vector<Expr> out;
    for (const std::string& t : texts) {
        try {
            out.push_back(Expr::parse(t));
        } catch (const ParseError& e) {
            throw ParseError(e.offset(), e.expected(), std::string(key) + ": '" + t + "': " + e.detail());
        }
    }
    return out;
}

double number(const ordered_json& v, const char* key) {
    if (!v.is_number()) throw ConfigError(std::string(key) + ": expected a number");
    return v.get<double>();
}

RunDefaults parse_run(const ordered_json& run) {
    RunDefaults out;
    if (run.is_null()) return out;
    if (!run.is_object()) throw ConfigError("run: expected a table");
    for (const auto& [key, value] : run.items()) {
        if (key == "box") {
            if (!value.is_array() || value.size() != 4) throw ConfigError("run.box: expected [p_lo, p_hi, v_lo, v_hi]");
            Box b{number(value[0], "run.box"), number(value[1], "run.box"), number(value[2], "run.box"),
                  number(value[3], "run.box")};
            if (!(b.p_lo < b.p_hi && b.v_lo < b.v_hi)) throw ConfigError("run.box: empty rectangle");
            out.box = b;
        } else if (key == "grid") {
            if (!value.is_number_integer() || value.get<long>() < 2) throw ConfigError("run.grid: integer >= 2");
            out.grid = value.get<std::size_t>();
        } else if (key == "lam_max") {
            out.lam_max = number(value, "run.lam_max");
        } else if (key == "seeds") {
            if (!value.is_array()) throw ConfigError("run.seeds: expected a list");
            for (const auto& s : value) out.seeds.push_back(number(s, "run.seeds"));
        } else if (key == "smax") {
            out.smax = number(value, "run.smax");
        } else if (key == "h0") {
            out.h0 = number(value, "run.h0");
        } else if (key == "hmin") {
            out.hmin = number(value, "run.hmin");
        } else if (key == "hmax") {
            out.hmax = number(value, "run.hmax");
        } else if (key == "state_bound") {
            out.state_bound = number(value, "run.state_bound");
        } else if (key == "tol") {
            out.tol = number(value, "run.tol");
        } else {
            throw ConfigError("run: unknown key '" + key + "'");
        }
    }
    return out;
}

}  // namespace

double parse_bound(const ordered_json& value) {
    if (value.is_number()) return value.get<double>();
    if (value.is_string()) {
        const std::string s = value.get<std::string>();
        if (s == "inf" || s == "+inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    throw ConfigError("domain bound must be a number, \"inf\" or \"-inf\"");
}

ProblemConfig parse_problem_config(const ordered_json& config) {
    if (!config.is_object()) throw ConfigError("configuration must be a table");
    static const char* known[] = {"name", "form", "n", "period", "phi", "psi", "monotone_hint", "g", "f",
                                  "k", "domain", "exclude", "breakpoints", "run"};
    for (const auto& [key, value] : config.items()) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            throw ConfigError("unknown key '" + key + "'");
    }
    auto require = [&](const char* key) -> const ordered_json& {
        if (!config.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
        return config.at(key);
    };

    const std::string name = config.value("name", std::string("problem"));
    const Form form = form_from_string(require("form").get<std::string>());
    std::size_t n = 1;
    if (config.contains("n")) {
        if (!config["n"].is_number_integer() || config["n"].get<long>() < 1) throw ConfigError("n: positive integer");
        n = config["n"].get<std::size_t>();
    }
    const double period = number(require("period"), "period");

    PhiMap phi;
    phi.phi = parse_components(require("phi"), n, "phi");
    if (config.contains("psi")) phi.psi = parse_components(config["psi"], n, "psi");
    if (config.contains("monotone_hint")) {
        const int hint = config["monotone_hint"].get<int>();
        if (hint < -1 || hint > 1) throw ConfigError("monotone_hint: -1, 0 or 1");
        phi.monotone_hint = hint;
    }
    std::vector<Expr> g;
    if (form == Form::Autonomous) {
        g = parse_components(require("g"), n, "g");
    } else if (config.contains("g")) {
        throw ConfigError("g is only allowed with form = autonomous");
    }
    std::vector<Expr> f = parse_components(require("f"), n, "f");
    std::optional<std::vector<Expr>> k;
    if (config.contains("k")) k = parse_components(config["k"], n, "k");

    Domain domain = Domain::whole(n);
    if (config.contains("domain")) {
        const auto& d = config["domain"];
        if (!d.is_array() || d.empty()) throw ConfigError("domain: expected a list of [lo, hi] pairs");
        std::vector<Interval> parts;
        for (const auto& pair : d) {
            if (!pair.is_array() || pair.size() != 2) throw ConfigError("domain: expected [lo, hi] pairs");
            parts.push_back({parse_bound(pair[0]), parse_bound(pair[1])});
        }
        domain = Domain(std::move(parts), n);
    }
    if (config.contains("exclude")) {
        std::vector<double> pts;
        for (const auto& p : config["exclude"]) pts.push_back(number(p, "exclude"));
        domain = domain.excluding(pts);
    }
    std::vector<double> breakpoints;
    if (config.contains("breakpoints"))
        for (const auto& b : config["breakpoints"]) breakpoints.push_back(number(b, "breakpoints"));

    ProblemSpec spec(name, form, n, period, std::move(phi), std::move(g), std::move(f), std::move(k),
                     std::move(domain), std::move(breakpoints));
    RunDefaults run = parse_run(config.contains("run") ? config["run"] : ordered_json());
    return ProblemConfig{name, config, std::move(spec), std::move(run)};
}

ProblemConfig load_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    ordered_json config;
    try {
        config = ordered_json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    }
    return parse_problem_config(config);
}

std::vector<std::string> builtin_ids() { return {"ex1", "ex2", "ex3", "ex4"}; }

ordered_json builtin_config(const std::string& id) {
    // [x'^3 + x']' = arctan(x) + lam (sin(2 pi t) - 1), T = 1
    if (id == "ex1")
        return {{"name", "ex1"},
                {"form", "autonomous"},
                {"n", 1},
                {"period", 1.0},
                {"phi", "v^3 + v"},
                {"g", "arctan(x)"},
                {"f", "sin(2*pi*t) - 1"},
                {"domain", ordered_json::array({ordered_json::array({"-inf", "inf"})})},
                {"run", {{"box", {-1.0, 1.0, -1.0, 1.0}}, {"grid", 15}, {"lam_max", 1.45}, {"seeds", {0.0}}}}};
    // [x'^3 + 2x']' = x^2 - x - lam (sin t - 2x^2), T = 2 pi
    if (id == "ex2")
        return {{"name", "ex2"},
                {"form", "autonomous"},
                {"n", 1},
                {"period", 2.0 * M_PI},
                {"phi", "v^3 + 2*v"},
                {"g", "x^2 - x"},
                {"f", "2*x^2 - sin(t)"},
                {"domain", ordered_json::array({ordered_json::array({"-inf", "inf"})})},
                {"run", {{"box", {-0.5, 1.5, -1.0, 1.0}}, {"grid", 15}, {"lam_max", 2.0}, {"seeds", {0.0, 1.0}}}}};
    // [lam x'^3 + x']' = (x^2 - 1)/(x^2 + 1) + lam (x^2 sin(2 pi t) + 1 - x), T = 1
    if (id == "ex3")
        return {{"name", "ex3"},
                {"form", "autonomous"},
                {"n", 1},
                {"period", 1.0},
                {"phi", "lam*v^3 + v"},
                {"g", "(x^2 - 1)/(x^2 + 1)"},
                {"f", "x^2*sin(2*pi*t) + 1 - x"},
                {"domain", ordered_json::array({ordered_json::array({"-inf", "inf"})})},
                {"run", {{"box", {-2.0, 3.0, -1.0, 1.0}}, {"grid", 15}, {"lam_max", 2.0}, {"seeds", {-1.0, 1.0}}}}};
    // [x'^3/3 + 2x']' = x^2 - x + lam (sin(2 pi t) - x^2), T = 1
    if (id == "ex4")
        return {{"name", "ex4"},
                {"form", "autonomous"},
                {"n", 1},
                {"period", 1.0},
                {"phi", "v^3/3 + 2*v"},
                {"g", "x^2 - x"},
                {"f", "sin(2*pi*t) - x^2"},
                {"domain", ordered_json::array({ordered_json::array({"-inf", "inf"})})},
                {"run", {{"box", {-0.2, 3.0, -1.5, 1.5}}, {"grid", 15}, {"lam_max", 1.5}, {"seeds", {0.0, 1.0}}}}};
    throw ConfigError("unknown builtin example '" + id + "' (expected ex1, ex2, ex3 or ex4)");
}

ProblemConfig builtin_example(const std::string& id) {
    ProblemConfig cfg = parse_problem_config(builtin_config(id));
    cfg.id = id;
    return cfg;
}

}  // namespace phibranch
