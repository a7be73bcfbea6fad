#include <doctest.h>

#include <cmath>
#include <fstream>

#include "phibranch/config.hpp"
#include "support.hpp"

using namespace phibranch;
using nlohmann::ordered_json;

TEST_SUITE("config") {

TEST_CASE("builtin examples parse") {
    for (const auto& id : builtin_ids()) {
        auto cfg = builtin_example(id);
        CHECK(cfg.id == id);
        CHECK(cfg.spec.form() == Form::Autonomous);
        CHECK(cfg.spec.dim() == 1);
        CHECK(cfg.run.box.has_value());
    }
    CHECK(builtin_example("ex2").spec.period() == doctest::Approx(2.0 * M_PI));
    CHECK_THROWS_AS(builtin_example("ex9"), ConfigError);
}

TEST_CASE("unknown and missing keys") {
    ordered_json j = builtin_config("ex1");
    j["colour"] = "red";
    CHECK_THROWS_AS(parse_problem_config(j), ConfigError);
    j = builtin_config("ex1");
    j.erase("period");
    CHECK_THROWS_AS(parse_problem_config(j), ConfigError);
    j = builtin_config("ex1");
    j["run"]["speed"] = 3;
    CHECK_THROWS_AS(parse_problem_config(j), ConfigError);
    j = builtin_config("ex1");
    j["run"]["box"] = {1, 0, -1, 1};
    CHECK_THROWS_AS(parse_problem_config(j), ConfigError);
}

TEST_CASE("formula errors carry the key") {
    ordered_json j = builtin_config("ex1");
    j["phi"] = "v^3 +* v";
    try {
        parse_problem_config(j);
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("phi") != std::string::npos);
    }
}

TEST_CASE("g is rejected for the lambda-perturbed form") {
    ordered_json j = builtin_config("ex1");
    j["form"] = "lambda-perturbed";
    CHECK_THROWS_AS(parse_problem_config(j), ConfigError);
    j.erase("g");
    CHECK(parse_problem_config(j).spec.form() == Form::LambdaPerturbed);
}

TEST_CASE("domain bounds and exclusions") {
    CHECK(std::isinf(parse_bound("inf")));
    CHECK(parse_bound("-inf") < 0.0);
    CHECK(parse_bound(2.5) == 2.5);
    CHECK_THROWS_AS(parse_bound("wide"), ConfigError);
    ordered_json j = builtin_config("ex2");
    j["exclude"] = {0.0, 1.0};
    auto cfg = parse_problem_config(j);
    CHECK(cfg.spec.domain().intervals().size() == 3);
}

TEST_CASE("files round trip") {
    const std::string path = "config_roundtrip_test.json";
    {
        std::ofstream out(path);
        out << builtin_config("ex3").dump(2);
    }
    auto cfg = load_problem_file(path);
    CHECK(cfg.source == builtin_config("ex3"));
    CHECK(cfg.spec.name() == "ex3");
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_problem_file("does/not/exist.json"), ConfigError);
}

}  // TEST_SUITE
