#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phibranch/problem.hpp"
#include "phibranch/shoot.hpp"

namespace phibranch {

/// Run parameters that may accompany a problem in its configuration
/// ("run" table). Command-line flags override them.
struct RunDefaults {
    std::optional<Box> box;
    std::size_t grid = 15;
    double lam_max = 2.0;
    std::vector<double> seeds;
    double smax = 50.0;
    double h0 = 1e-2;
    double hmin = 1e-7;
    double hmax = 0.1;
    double state_bound = 1e3;
    double tol = 1e-10;
};

/// A parsed problem together with the configuration it came from.
struct ProblemConfig {
    std::string id;
    nlohmann::ordered_json source;
    ProblemSpec spec;
    RunDefaults run;
};

/// Builds a problem from a configuration object. Throws ConfigError for
/// missing or malformed keys and ParseError for bad formulas.
///
///     {
///       "name": "ex1", "form": "autonomous", "n": 1, "period": 1,
///       "phi": "v^3+v", "g": "arctan(x)", "f": "sin(2*pi*t)-1",
///       "domain": [["-inf", "inf"]], "exclude": [],
///       "run": {"box": [-1, 1, -1, 1], "grid": 15, "lam_max": 1.45, "seeds": [0]}
///     }
ProblemConfig parse_problem_config(const nlohmann::ordered_json& config);

ProblemConfig load_problem_file(const std::string& path);

/// The four bundled examples: ex1, ex2, ex3 (three scalar equations with
/// cubic phi) and ex4 (the irregular branch).
ProblemConfig builtin_example(const std::string& id);
std::vector<std::string> builtin_ids();
nlohmann::ordered_json builtin_config(const std::string& id);

/// Parses "inf", "-inf", "+inf" or a JSON number.
double parse_bound(const nlohmann::ordered_json& value);

}  // namespace phibranch
