#pragma once

#include <string>

#include <json.hpp>

#include "phibranch/config.hpp"

namespace testing_support {

using nlohmann::ordered_json;

// Scalar problem on the real line from formula strings.
inline phibranch::ProblemConfig scalar_problem(const std::string& form, double period, const std::string& phi,
                                               const std::string& g, const std::string& f) {
    ordered_json j = {{"name", "test"}, {"form", form}, {"n", 1}, {"period", period}, {"phi", phi}};
    if (!g.empty()) j["g"] = g;
    j["f"] = f;
    return phibranch::parse_problem_config(j);
}

inline phibranch::ProblemConfig autonomous(const std::string& phi, const std::string& g, const std::string& f,
                                           double period = 1.0) {
    return scalar_problem("autonomous", period, phi, g, f);
}

inline phibranch::ProblemConfig perturbed(const std::string& phi, const std::string& f, double period = 1.0) {
    return scalar_problem("lambda-perturbed", period, phi, "", f);
}

}  // namespace testing_support
