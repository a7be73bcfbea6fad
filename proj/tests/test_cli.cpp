#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phibranch/cli.hpp"
#include "phibranch/config.hpp"

using namespace phibranch;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({"shoot", "--example", "ex1"}).code == kExitUsage);
    CHECK(cli({"verify", "--example", "ex7"}).code == kExitUsage);
    CHECK(cli({"degree", "--example", "ex1", "--field", "delta"}).code == kExitUsage);
    CHECK(cli({"verify", "--problem", "no/such/file.json"}).code == kExitUsage);
}

TEST_CASE("examples lists the builtins") {
    Run r = cli({"examples"});
    CHECK(r.code == kExitOk);
    for (const auto& id : builtin_ids()) CHECK(r.out.find(id + ":") != std::string::npos);
}

TEST_CASE("verify echoes the configuration exactly") {
    Run r = cli({"verify", "--example", "ex2"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find(builtin_config("ex2").dump(2)) != std::string::npos);
    CHECK(r.out.find("deg(gamma, (-inf, inf)) = 0") != std::string::npos);
    CHECK(r.out.find("verify: ok") != std::string::npos);

    Run r3 = cli({"verify", "--example", "ex3"});
    CHECK(r3.out.find("zero at -1") != std::string::npos);
    CHECK(r3.out.find("zero at 1") != std::string::npos);
}

TEST_CASE("malformed formulas are usage errors with an offset") {
    fs::path path = "cli_bad_phi.json";
    auto j = builtin_config("ex1");
    j["phi"] = "v^3 + + v";
    std::ofstream(path) << j.dump();
    Run r = cli({"verify", "--problem", path.string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("offset") != std::string::npos);
    fs::remove(path);
}

TEST_CASE("degree subcommand") {
    Run r1 = cli({"degree", "--example", "ex1"});
    CHECK(r1.code == kExitOk);
    CHECK(r1.out.find("degree: 1\n") != std::string::npos);

    Run a = cli({"degree", "--example", "ex2", "--domain", "-0.5,0.5"});
    CHECK(a.out.find("degree: -1\n") != std::string::npos);
    Run b = cli({"degree", "--example", "ex2", "--domain", "0.5,1.5"});
    CHECK(b.out.find("degree: 1\n") != std::string::npos);
    Run c = cli({"degree", "--example", "ex2", "--exclude", "0,1"});
    CHECK(c.out.find("degree: 0\n") != std::string::npos);
    CHECK(c.code == kExitDiagnostic);

    Run d = cli({"degree", "--example", "ex1", "--domain", "0,1"});
    CHECK(d.code == kExitDiagnostic);
}

TEST_CASE("domain text") {
    CHECK(parse_domain_text("R").intervals().size() == 1);
    Domain d = parse_domain_text("-inf,0;0,inf");
    CHECK(d.intervals().size() == 2);
    CHECK(std::isinf(d.intervals()[0].lo));
    CHECK_THROWS(parse_domain_text("1,0"));
    CHECK_THROWS(parse_domain_text("abc"));
}

TEST_CASE("shoot writes one row per orbit") {
    Run r = cli({"shoot", "--example", "ex3", "--lam", "0", "--box", "-2,2,-1,1", "--grid", "9"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.rfind("lambda,p,v,c1norm,diam,residual\n", 0) == 0);
    CHECK(count_lines(r.out) == 3);

    fs::path dir = "cli_shoot_out";
    fs::remove_all(dir);
    Run w = cli({"shoot", "--example", "ex3", "--lam", "0", "--box", "-2,2,-1,1", "--grid", "9", "--out-dir",
                 dir.string()});
    CHECK(w.code == kExitOk);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    REQUIRE(files.size() == 1);
    CHECK(slurp(files[0]) == r.out);
    fs::remove_all(dir);
}

TEST_CASE("continue writes byte-stable branch files") {
    fs::path d1 = "cli_cont_a", d2 = "cli_cont_b";
    fs::remove_all(d1);
    fs::remove_all(d2);
    Run a = cli({"continue", "--example", "ex1", "--lam-max", "0.5", "--out-dir", d1.string()});
    Run b = cli({"continue", "--example", "ex1", "--lam-max", "0.5", "--out-dir", d2.string()});
    CHECK(a.code == kExitOk);
    CHECK(a.out.find("termination lambda-bound") != std::string::npos);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(d1)) files.push_back(e.path().filename());
    REQUIRE(files.size() == 1);
    CHECK(slurp(d1 / files[0]) == slurp(d2 / files[0]));
    CHECK(slurp(d1 / files[0]).rfind("s,lambda,p,v,c1norm,diam,residual,fold_flag\n", 0) == 0);
    fs::remove_all(d1);
    fs::remove_all(d2);

    Run bad = cli({"continue", "--example", "ex2", "--seed", "0.5", "--out-dir", "cli_cont_bad"});
    CHECK(bad.code == kExitDiagnostic);
    CHECK(bad.out.find("rejected") != std::string::npos);
    fs::remove_all("cli_cont_bad");
}

}  // TEST_SUITE
