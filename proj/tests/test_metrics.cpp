#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mbjm/metrics.hpp"

using namespace mbjm;

namespace {

ScoredPrediction sp(double p, int status, double w = 1.0) {
    ScoredPrediction s;
    s.p = p;
    s.status = status;
    s.weight = w;
    return s;
}

}  // namespace

TEST_CASE("auc by direct pair enumeration") {
    // cases {0.9, 0.4}, controls {0.5, 0.3}: concordant pairs
    // (0.9,0.5), (0.9,0.3), (0.4,0.3); discordant (0.4,0.5) -> 3/4
    const std::vector<ScoredPrediction> scored = {sp(0.9, 1), sp(0.4, 1), sp(0.5, 0),
                                                  sp(0.3, 0)};
    const AucResult r = td_auc(scored);
    REQUIRE(r.value.has_value());
    CHECK(*r.value == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("tied predictions count half") {
    const std::vector<ScoredPrediction> scored = {sp(0.5, 1), sp(0.5, 0)};
    REQUIRE(td_auc(scored).value.has_value());
    CHECK(*td_auc(scored).value == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("perfect and inverted rankings") {
    const std::vector<ScoredPrediction> good = {sp(0.9, 1), sp(0.8, 1), sp(0.2, 0),
                                                sp(0.1, 0)};
    const std::vector<ScoredPrediction> bad = {sp(0.1, 1), sp(0.2, 1), sp(0.8, 0),
                                               sp(0.9, 0)};
    CHECK(*td_auc(good).value == doctest::Approx(1.0));
    CHECK(*td_auc(bad).value == doctest::Approx(0.0));
}

TEST_CASE("auc is undefined without case-control pairs") {
    SUBCASE("no cases") {
        const auto r = td_auc({sp(0.5, 0), sp(0.3, 0)});
        CHECK_FALSE(r.value.has_value());
        CHECK_FALSE(r.reason.empty());
    }
    SUBCASE("no controls") {
        CHECK_FALSE(td_auc({sp(0.5, 1)}).value.has_value());
    }
    SUBCASE("only zero-weight members of one class") {
        const auto r = td_auc({sp(0.5, 1), sp(0.3, 0, 0.0)});
        CHECK_FALSE(r.value.has_value());
    }
}

TEST_CASE("auc is invariant under monotone transforms of the score") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ud(0.01, 0.99);
    std::bernoulli_distribution bd(0.4);
    std::vector<ScoredPrediction> a, b;
    for (int i = 0; i < 200; ++i) {
        const double p = ud(rng);
        const int st = bd(rng) ? 1 : 0;
        a.push_back(sp(p, st));
        b.push_back(sp(std::log(p / (1 - p)), st));  // strictly increasing map
    }
    CHECK(*td_auc(a).value == doctest::Approx(*td_auc(b).value).epsilon(1e-12));
}

TEST_CASE("weighted auc moves toward the up-weighted pair") {
    // unweighted: 0.75 as above; up-weight the discordant case
    std::vector<ScoredPrediction> scored = {sp(0.9, 1), sp(0.4, 1, 3.0), sp(0.5, 0),
                                            sp(0.3, 0)};
    // pairs: (0.9 vs 0.5) w1 conc, (0.9 vs 0.3) w1 conc, (0.4 vs 0.5) w3 disc,
    // (0.4 vs 0.3) w3 conc -> 5/8
    CHECK(*td_auc(scored).value == doctest::Approx(5.0 / 8.0).epsilon(1e-12));
}

TEST_CASE("brier score by hand") {
    // (1-0.7)^2 = 0.09, (0-0.4)^2 = 0.16 -> mean 0.125
    CHECK(brier({sp(0.7, 1), sp(0.4, 0)}) == doctest::Approx(0.125).epsilon(1e-12));
    // weighted: (0.09 * 1 + 0.16 * 3) / 4 = 0.1425
    CHECK(brier({sp(0.7, 1), sp(0.4, 0, 3.0)}) == doctest::Approx(0.1425).epsilon(1e-12));
}

TEST_CASE("censored-in-window subjects carry zero weight in the brier score") {
    const double base = brier({sp(0.7, 1), sp(0.4, 0)});
    CHECK(brier({sp(0.7, 1), sp(0.4, 0), sp(0.99, -1, 0.0)}) ==
          doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("brier on empty input is an error") {
    CHECK_THROWS_AS(brier({}), std::invalid_argument);
}

TEST_CASE("censoring kaplan-meier steps") {
    // censoring events (delta = 0 in the data) at t = 1 and 3 of 4 subjects:
    // G(t) = 1 on [0,1), 3/4 on [1,3), 3/4 * (1/2) on [3,...)
    const CensoringKm km({1.0, 2.0, 3.0, 4.0}, {0, 1, 0, 1});
    CHECK(km.survival(0.5) == doctest::Approx(1.0));
    CHECK(km.survival(1.5) == doctest::Approx(0.75));
    CHECK(km.survival(3.5) == doctest::Approx(0.375));
}

TEST_CASE("ipcw status assignment and weights") {
    const CensoringKm km({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}, {1, 1, 1, 1, 1, 1});  // no censoring

    SUBCASE("event inside the window") {
        const auto r = ipcw_score(0.5, 2.0, 1, 1.0, 2.0, km);
        CHECK(r.status == 1);
        CHECK(r.weight == doctest::Approx(1.0));
    }
    SUBCASE("event-free past the window") {
        const auto r = ipcw_score(0.5, 9.0, 0, 1.0, 2.0, km);
        CHECK(r.status == 0);
        CHECK(r.weight == doctest::Approx(1.0));
    }
    SUBCASE("censored inside the window gets zero weight") {
        const auto r = ipcw_score(0.5, 2.0, 0, 1.0, 2.0, km);
        CHECK(r.status == -1);
        CHECK(r.weight == doctest::Approx(0.0));
    }
    SUBCASE("event past the window counts as a control") {
        const auto r = ipcw_score(0.5, 9.0, 1, 1.0, 2.0, km);
        CHECK(r.status == 0);
    }
}

TEST_CASE("ipcw weights are inverse censoring survival") {
    // heavy censoring: G steps at 1 and 2
    const CensoringKm km({1.0, 2.0, 3.0, 4.0}, {0, 0, 1, 1});
    // G: 1 on [0,1), 3/4 on [1,2), 1/2 on [2,...)
    const double s = 0.5, d = 2.0;
    // event at t = 1.5 in window: weight 1 / G(1.5-) ... normalized by G(s)
    const auto ev = ipcw_score(0.3, 1.5, 1, s, d, km);
    CHECK(ev.status == 1);
    CHECK(ev.weight > 0.0);
    // control surviving past s + d: weight G(s) / G(s + d)
    const auto ct = ipcw_score(0.3, 9.0, 1, s, d, km);
    CHECK(ct.status == 0);
    CHECK(ct.weight == doctest::Approx(km.survival(s) / km.survival(s + d)));
}

TEST_CASE("logit confidence interval") {
    // p = 0.5, se = 1 on the logit scale, 95%: expit(+-1.959964)
    const auto [lo, hi] = ci_logit(0.5, 1.0);
    CHECK(lo == doctest::Approx(0.12347094531688806).epsilon(1e-9));
    CHECK(hi == doctest::Approx(0.87652905468311194).epsilon(1e-9));
    CHECK(lo < 0.5);
    CHECK(hi > 0.5);

    // interval respects (0,1) even for extreme p
    const auto [l2, h2] = ci_logit(1e-9, 2.0);
    CHECK(l2 > 0.0);
    CHECK(h2 < 1.0);

    // wider level widens the interval
    const auto [l3, h3] = ci_logit(0.5, 1.0, 0.99);
    CHECK(l3 < lo);
    CHECK(h3 > hi);
}

TEST_CASE("expit and logit are inverses") {
    for (double p : {0.01, 0.2, 0.5, 0.9, 0.999})
        CHECK(expit(logit(p)) == doctest::Approx(p).epsilon(1e-12));
    CHECK(expit(0.0) == doctest::Approx(0.5));
}

TEST_CASE("accuracy report lookup and csv shape") {
    AccuracyReport rep;
    rep.model_tag = "M";
    AccuracyCell c;
    c.s = 1.0;
    c.horizon = 3.0;
    c.auc = 0.8;
    c.brier = 0.1;
    c.n_at_risk = 100;
    c.n_cases = 20;
    rep.cells.push_back(c);

    REQUIRE(rep.find(1.0, 3.0) != nullptr);
    CHECK(rep.find(1.0, 3.0)->n_at_risk == 100);
    CHECK(rep.find(2.0, 3.0) == nullptr);

    const std::string csv = rep.to_csv();
    CHECK(csv.find("M") != std::string::npos);
    CHECK(csv.find("0.8") != std::string::npos);
}
