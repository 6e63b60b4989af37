#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mbjm/spm.hpp"

using namespace mbjm;

namespace {

LongitudinalDataset spm_dataset(std::uint64_t seed, int n = 400) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    LongitudinalDataset ds;
    ds.covariate_names = {"age"};
    ds.biomarker_specs = {{"m1", BiomarkerKind::Continuous, {}, 1},
                          {"m2", BiomarkerKind::Continuous, {}, 2}};
    for (int i = 0; i < n; ++i) {
        SubjectRecord s;
        s.subject_id = "s" + std::to_string(i);
        s.covariates = {nd(rng)};
        const double y1 = 1.0 + 0.5 * nd(rng);
        const double y2 = -0.5 + 0.5 * nd(rng);
        const double scale = std::exp(1.5 - 0.3 * y1 + 0.2 * y2 - 0.1 * s.covariates[0]);
        const double tt = scale * std::pow(-std::log(ud(rng)), 1.0 / 1.3);
        const double c = -8.0 * std::log(ud(rng));
        s.observed_time = std::max(std::min(tt, c), 0.05);
        s.event_indicator = tt <= c ? 1 : 0;
        for (double t = 0.0; t < s.observed_time; t += 0.5)
            s.visits.push_back({t, {y1 + 0.1 * t, y2 - 0.05 * t}});
        ds.subjects.push_back(std::move(s));
    }
    return ds;
}

}  // namespace

TEST_CASE("fit uses the earliest complete visit as baseline") {
    auto ds = spm_dataset(3);
    const SpmModel m = fit_spm(ds);
    CHECK(m.n_covariates == 1);
    CHECK(m.n_biomarkers == 2);
    CHECK(m.n_excluded == 0);
    // design: intercept + age + 2 baselines
    CHECK(m.weibull.coefficients.size() == 4);
    CHECK(m.weibull.shape > 0.0);
}

TEST_CASE("subjects without a usable baseline are excluded and counted") {
    auto ds = spm_dataset(5, 50);
    ds.subjects[0].visits.clear();
    ds.subjects[1].visits[0].values[1] = std::nullopt;
    ds.subjects[1].visits.resize(1);
    const SpmModel m = fit_spm(ds);
    CHECK(m.n_excluded == 2);
}

TEST_CASE("incomplete first visit falls through to the next complete one") {
    auto ds = spm_dataset(7, 50);
    ds.subjects[0].visits[0].values[0] = std::nullopt;
    const SpmModel with_gap = fit_spm(ds);
    CHECK(with_gap.n_excluded == 0);
}

TEST_CASE("prediction ignores history beyond the current values") {
    const auto ds = spm_dataset(9);
    const SpmModel m = fit_spm(ds);
    Eigen::VectorXd v(1), cur(2);
    v << 0.3;
    cur << 1.2, -0.4;
    const double p = spm_predict(m, v, cur, 3.0);
    // bit-identical regardless of any notion of elapsed time or past values
    CHECK(spm_predict(m, v, cur, 3.0) == p);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
}

TEST_CASE("zero horizon gives zero risk") {
    const auto ds = spm_dataset(11);
    const SpmModel m = fit_spm(ds);
    Eigen::VectorXd v(1), cur(2);
    v << 0.0;
    cur << 1.0, 0.0;
    CHECK(spm_predict(m, v, cur, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("risk increases with the horizon") {
    const auto ds = spm_dataset(13);
    const SpmModel m = fit_spm(ds);
    Eigen::VectorXd v(1), cur(2);
    v << -0.2;
    cur << 0.8, -0.3;
    double prev = 0.0;
    for (double d : {0.5, 1.0, 2.0, 5.0, 20.0}) {
        const double p = spm_predict(m, v, cur, d);
        CHECK(p > prev);
        prev = p;
    }
}

TEST_CASE("higher-risk baseline profile raises the prediction") {
    const auto ds = spm_dataset(15);
    const SpmModel m = fit_spm(ds);
    // generating model: scale falls with m1, so larger m1 = earlier events
    Eigen::VectorXd v(1), lo(2), hi(2);
    v << 0.0;
    lo << 0.0, 0.0;
    hi << 2.0, 0.0;
    CHECK(spm_predict(m, v, hi, 3.0) > spm_predict(m, v, lo, 3.0));
}

TEST_CASE("current values are carried forward from the last complete visit") {
    SubjectRecord s;
    s.subject_id = "x";
    s.covariates = {0.0};
    s.observed_time = 10.0;
    s.event_indicator = 0;
    s.visits = {{0.0, {1.0, 2.0}},
                {1.0, {1.5, std::nullopt}},  // incomplete
                {2.0, {1.8, 2.5}},
                {4.0, {2.2, 3.0}}};

    Eigen::VectorXd out;
    SUBCASE("mid-history lookup skips the incomplete visit") {
        REQUIRE(spm_current_values(s, 1.5, out));
        CHECK(out(0) == doctest::Approx(1.0));
        CHECK(out(1) == doctest::Approx(2.0));
    }
    SUBCASE("lookup at a complete visit returns it") {
        REQUIRE(spm_current_values(s, 2.0, out));
        CHECK(out(0) == doctest::Approx(1.8));
    }
    SUBCASE("late lookup takes the last visit") {
        REQUIRE(spm_current_values(s, 9.0, out));
        CHECK(out(0) == doctest::Approx(2.2));
        CHECK(out(1) == doctest::Approx(3.0));
    }
    SUBCASE("lookup before any visit fails") {
        SubjectRecord late = s;
        for (auto& visit : late.visits) visit.time += 5.0;
        CHECK_FALSE(spm_current_values(late, 1.0, out));
    }
}
