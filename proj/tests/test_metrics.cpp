#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "papi/metrics.hpp"
#include "papi/rng.hpp"

using namespace papi;

TEST_CASE("stability endpoints are exact") {
    // no forgetting at all: current loss still at its snapshot
    const StabilityValue full = stability_ratio({0.2, 0.2, 1.2});
    CHECK(full.raw == 1.0);
    CHECK(full.clamped == 1.0);
    CHECK_FALSE(full.degenerate);

    // collapsed to the random baseline
    const StabilityValue none = stability_ratio({1.2, 0.2, 1.2});
    CHECK(none.raw == 0.0);
    CHECK(none.clamped == 0.0);
}

TEST_CASE("stability clamps but keeps the raw value") {
    // worse than random: raw goes negative, clamped floors at 0
    const StabilityValue worse = stability_ratio({2.2, 0.2, 1.2});
    CHECK(worse.raw == doctest::Approx(-1.0));
    CHECK(worse.clamped == 0.0);

    // improved beyond the snapshot: raw exceeds 1, clamped caps
    const StabilityValue better = stability_ratio({0.1, 0.2, 1.2});
    CHECK(better.raw > 1.0);
    CHECK(better.clamped == 1.0);
}

TEST_CASE("degenerate normalization is flagged or rejected") {
    CHECK_THROWS_AS(stability_ratio({0.5, 0.7, 0.7}), NumericError);  // zero denom
    const StabilityValue d = stability_ratio({0.5, 0.9, 0.6});        // random below snapshot
    CHECK(d.degenerate);
}

TEST_CASE("raw stability and normalized forgetting sum to one") {
    Rng rng(40);
    for (int rep = 0; rep < 200; ++rep) {
        LossTriple t;
        t.loss_snapshot = rng.uniform(0.1, 1.0);
        t.loss_random = t.loss_snapshot + rng.uniform(0.05, 2.0);
        t.loss_current = rng.uniform(0.0, 3.0);
        const StabilityValue s = stability_ratio(t);
        const double norm_forget =
            forgetting(t.loss_current, t.loss_snapshot) / (t.loss_random - t.loss_snapshot);
        CHECK(s.raw + norm_forget == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("average stability is a mean and undefined before task 2") {
    std::vector<double> v{0.2, 0.8, 0.5};
    CHECK(average_stability(v) == doctest::Approx(0.5));
    std::vector<double> perm{0.8, 0.5, 0.2};
    CHECK(average_stability(v) == doctest::Approx(average_stability(perm)));
    CHECK(average_stability({1.0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(average_stability({}), ContractError);
}

TEST_CASE("plasticity normalizes learning against random init") {
    CHECK(plasticity_ratio(1.0, 0.1, 0.4) == doctest::Approx(1.5));
    CHECK(plasticity_ratio(1.0, 1.0, 0.5) == doctest::Approx(0.0));  // learned nothing
    CHECK(plasticity_ratio(1.0, 0.5, 0.5) == doctest::Approx(1.0));  // reached baseline gap
    CHECK_THROWS_AS(plasticity_ratio(0.5, 0.1, 0.5), NumericError);  // zero denominator
}

TEST_CASE("forgetting is a plain loss difference") {
    CHECK(forgetting(0.9, 0.2) == doctest::Approx(0.7));
    CHECK(forgetting(0.2, 0.9) == doctest::Approx(-0.7));  // backward transfer allowed
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(forgetting(nan, 0.2), NumericError);
    CHECK_THROWS_AS(forgetting(0.2, nan), NumericError);
}

TEST_CASE("metrics report renders long-format csv") {
    MetricsReport rep;
    rep.run = "r1";
    rep.method = "papi";
    rep.add(1, 2, "stability", 0.75);
    rep.add(0, 2, "energy_total", 42.0);
    const std::string expect = std::string("run,method,i,t,metric,value\n") +
                               "r1,papi,1,2,stability," + format_double(0.75) + "\n" +
                               "r1,papi,0,2,energy_total," + format_double(42.0) + "\n";
    CHECK(rep.csv() == expect);
}
