#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "mbjm/csv.hpp"
#include "mbjm/dataset.hpp"

using namespace mbjm;

namespace {

LongitudinalDataset tiny_dataset() {
    LongitudinalDataset ds;
    ds.covariate_names = {"age", "sex"};
    ds.biomarker_specs = {{"marker_a", BiomarkerKind::CategoricalBinary, {}, 1},
                          {"marker_b", BiomarkerKind::Continuous, {}, 2}};
    SubjectRecord s1;
    s1.subject_id = "s1";
    s1.covariates = {0.5, 1.0};
    s1.observed_time = 4.0;
    s1.event_indicator = 1;
    s1.visits = {{0.0, {0.0, 1.2}}, {1.0, {1.0, 1.5}}, {2.5, {1.0, 2.0}}};
    SubjectRecord s2 = s1;
    s2.subject_id = "s2";
    s2.observed_time = 6.0;
    s2.event_indicator = 0;
    ds.subjects = {s1, s2};
    return ds;
}

}  // namespace

TEST_CASE("clean dataset validates with no violations") {
    const auto rep = validate_dataset(tiny_dataset());
    CHECK(rep.clean());
    CHECK(rep.n_subjects_checked == 2);
}

TEST_CASE("validator flags each broken invariant") {
    auto ds = tiny_dataset();

    SUBCASE("visit at or past observed time") {
        ds.subjects[0].visits.push_back({4.0, {1.0, 2.0}});
        CHECK(validate_dataset(ds).count("visit-time-range") == 1);
    }
    SUBCASE("non-increasing visit times") {
        ds.subjects[0].visits[1].time = 0.0;
        CHECK(validate_dataset(ds).count("visit-times-increasing") >= 1);
    }
    SUBCASE("negative observed time") {
        ds.subjects[1].observed_time = 0.0;
        CHECK(validate_dataset(ds).count("positive-observed-time") == 1);
    }
    SUBCASE("categorical value outside {0,1}") {
        ds.subjects[0].visits[0].values[0] = 0.5;
        CHECK(validate_dataset(ds).count("categorical-binary") == 1);
    }
    SUBCASE("non-finite value") {
        ds.subjects[0].visits[0].values[1] = std::nan("");
        CHECK(validate_dataset(ds).count("finite-values") == 1);
    }
    SUBCASE("covariate length mismatch") {
        ds.subjects[0].covariates.pop_back();
        CHECK(validate_dataset(ds).count("covariate-dimension") == 1);
    }
    SUBCASE("layer indices must form 1..M") {
        ds.biomarker_specs[1].layer_index = 3;
        CHECK(validate_dataset(ds).count("layer-index-set") == 1);
    }
    SUBCASE("dataset with zero events") {
        ds.subjects[0].event_indicator = 0;
        CHECK(validate_dataset(ds).count("at-least-one-event") == 1);
    }
    SUBCASE("missing values are allowed") {
        ds.subjects[0].visits[0].values[1] = std::nullopt;
        CHECK(validate_dataset(ds).clean());
    }
}

TEST_CASE("fold split partitions subjects with near-equal sizes") {
    LongitudinalDataset ds = tiny_dataset();
    ds.subjects.clear();
    for (int i = 0; i < 312; ++i) {
        SubjectRecord s;
        s.subject_id = "p" + std::to_string(i);
        s.covariates = {0.0, 0.0};
        s.observed_time = 1.0 + i * 0.01;
        s.event_indicator = i % 2;
        ds.subjects.push_back(s);
    }
    const FoldSplit split = split_folds(ds, 5, 99);

    std::vector<int> sizes(5, 0);
    for (int a : split.assignment) {
        REQUIRE(a >= 0);
        REQUIRE(a < 5);
        ++sizes[a];
    }
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    CHECK(sizes == std::vector<int>{63, 63, 62, 62, 62});

    // train/test partition each fold, and the union of tests covers everyone
    std::vector<int> seen(312, 0);
    for (int f = 0; f < 5; ++f) {
        const auto tr = split.train_indices(f);
        const auto te = split.test_indices(f);
        CHECK(tr.size() + te.size() == 312);
        for (auto i : te) ++seen[i];
    }
    for (int c : seen) CHECK(c == 1);
}

TEST_CASE("fold split is deterministic in the seed and shuffled across seeds") {
    auto ds = tiny_dataset();
    for (int i = 0; i < 50; ++i) {
        SubjectRecord s = ds.subjects[0];
        s.subject_id = "x" + std::to_string(i);
        ds.subjects.push_back(s);
    }
    const auto a = split_folds(ds, 4, 7);
    const auto b = split_folds(ds, 4, 7);
    const auto c = split_folds(ds, 4, 8);
    CHECK(a.assignment == b.assignment);
    CHECK(a.assignment != c.assignment);
}

TEST_CASE("fold split rejects bad k") {
    const auto ds = tiny_dataset();
    CHECK_THROWS_AS(split_folds(ds, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(split_folds(ds, 3, 0), std::invalid_argument);
}

TEST_CASE("subset copies the selected subjects in order") {
    const auto ds = tiny_dataset();
    const auto sub = subset(ds, {1});
    REQUIRE(sub.subjects.size() == 1);
    CHECK(sub.subjects[0].subject_id == "s2");
    CHECK(sub.biomarker_specs.size() == 2);
}

TEST_CASE("csv round trip preserves the dataset") {
    const auto ds = tiny_dataset();
    std::ostringstream os;
    export_csv_long(ds, os);

    CsvSchema schema;
    schema.covariate_cols = {"age", "sex"};
    schema.biomarkers = ds.biomarker_specs;
    std::istringstream is(os.str());
    const auto back = load_csv_long(is, schema);

    REQUIRE(back.subjects.size() == 2);
    CHECK(back.subjects[0].subject_id == "s1");
    CHECK(back.subjects[0].observed_time == doctest::Approx(4.0));
    CHECK(back.subjects[0].event_indicator == 1);
    REQUIRE(back.subjects[0].visits.size() == 3);
    CHECK(*back.subjects[0].visits[2].values[1] == doctest::Approx(2.0));
}

TEST_CASE("csv loader reports line numbers and offending subjects") {
    CsvSchema schema;
    schema.covariate_cols = {"age"};
    schema.biomarkers = {{"m", BiomarkerKind::Continuous, {}, 1}};

    SUBCASE("missing column") {
        std::istringstream in("subject_id,time,event_time\n");
        CHECK_THROWS_AS(load_csv_long(in, schema), ParseError);
    }
    SUBCASE("non-numeric field names the line") {
        std::istringstream in(
            "subject_id,time,event_time,event_indicator,age,m\n"
            "a,0,5,1,0.1,2.0\n"
            "a,oops,5,1,0.1,2.0\n");
        try {
            load_csv_long(in, schema);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
    }
    SUBCASE("visit at or after event time names the subject") {
        std::istringstream in(
            "subject_id,time,event_time,event_indicator,age,m\n"
            "bob,0,5,1,0.1,2.0\n"
            "bob,5,5,1,0.1,2.1\n");
        try {
            load_csv_long(in, schema);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("bob") != std::string::npos);
        }
    }
    SUBCASE("categorical column outside {0,1}") {
        CsvSchema cs = schema;
        cs.biomarkers[0].kind = BiomarkerKind::CategoricalBinary;
        std::istringstream in(
            "subject_id,time,event_time,event_indicator,age,m\n"
            "a,0,5,1,0.1,2\n");
        CHECK_THROWS_AS(load_csv_long(in, cs), ValidationError);
    }
}

TEST_CASE("ingestion transform is applied to biomarker values") {
    CsvSchema schema;
    schema.covariate_cols = {"age"};
    schema.biomarkers = {{"m", BiomarkerKind::Continuous, Transform::log(), 1}};
    std::istringstream in(
        "subject_id,time,event_time,event_indicator,age,m\n"
        "a,0,5,1,0.1,7.389056098930650\n");
    const auto ds = load_csv_long(in, schema);
    CHECK(*ds.subjects[0].visits[0].values[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("time rescale multiplies visit and event times") {
    CsvSchema schema;
    schema.covariate_cols = {"age"};
    schema.biomarkers = {{"m", BiomarkerKind::Continuous, {}, 1}};
    schema.time_rescale = 1.0 / 365.25;
    std::istringstream in(
        "subject_id,time,event_time,event_indicator,age,m\n"
        "a,0,3652.5,1,0.1,2.0\n");
    const auto ds = load_csv_long(in, schema);
    CHECK(ds.subjects[0].observed_time == doctest::Approx(10.0));
}
