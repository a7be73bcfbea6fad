#include <doctest.h>

#include <cmath>

#include "phibranch/config.hpp"
#include "phibranch/continuation.hpp"
#include "phibranch/parallel.hpp"

using namespace phibranch;

// Branch crossings inside the scan box against brute-force grid shooting.
TEST_SUITE("oracle") {

TEST_CASE("branch crossings agree with grid shooting") {
    for (const auto& id : builtin_ids()) {
        auto cfg = builtin_example(id);
        TraceOptions o;
        o.lam_max = cfg.run.lam_max;
        std::vector<Branch> branches;
        for (double s : cfg.run.seeds) branches.push_back(trace(cfg.spec, s, o));
        const Box box = *cfg.run.box;
        for (double lam : {0.2, 0.4, 0.6}) {
            CAPTURE(id);
            CAPTURE(lam);
            std::vector<StartingPoint> crossings;
            for (const auto& c : branch_crossings(cfg.spec, branches, lam))
                if (box.contains(c.p, c.v)) crossings.push_back(c);
            auto grid = grid_scan(cfg.spec, lam, box, cfg.run.grid);
            REQUIRE(crossings.size() == grid.orbits.size());
            for (std::size_t i = 0; i < crossings.size(); ++i) {
                CHECK(std::abs(crossings[i].p - grid.orbits[i].start.p) <= 1e-6);
                CHECK(std::abs(crossings[i].v - grid.orbits[i].start.v) <= 1e-6);
            }
        }
    }
}

}  // TEST_SUITE
