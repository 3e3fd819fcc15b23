#include <doctest.h>

#include <filesystem>
#include <limits>

#include "aee/errors.hpp"
#include "aee/io.hpp"
#include "aee/rng.hpp"

using namespace aee;

TEST_SUITE("io") {

TEST_CASE("doubles round trip through text") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK_THROWS_AS(parse_double("1.5x"), ParseError);
    CHECK_THROWS_AS(parse_double(""), ParseError);
}

TEST_CASE("dataset csv and ndjson round trips") {
    Dataset d{{"a", {1.0, -2.5, 3.25}, Label::ok}, {"b", {0.1, 0.2, 0.3}, Label::nok}};
    CHECK(dataset_from_csv(dataset_to_csv(d)) == d);
    CHECK(dataset_from_ndjson(dataset_to_ndjson(d)) == d);
    Dataset unlabeled{{"u", {1.0, 2.0}, std::nullopt}};
    CHECK(dataset_from_csv(dataset_to_csv(unlabeled)) == unlabeled);
    CHECK_THROWS(dataset_from_csv("id,t0,t1\na,1\n"));
    CHECK_THROWS(dataset_from_csv("id,t0,t1\na,1,zz\n"));
}

TEST_CASE("dataset files by extension") {
    const auto dir = std::filesystem::temp_directory_path() / "aee_test_io";
    std::filesystem::remove_all(dir);
    Dataset d{{"a", {1.0, 2.0}, Label::ok}};
    save_dataset(dir / "x.csv", d);
    save_dataset(dir / "x.ndjson", d);
    CHECK(load_dataset(dir / "x.csv") == d);
    CHECK(load_dataset(dir / "x.ndjson") == d);
    CHECK_THROWS(load_dataset(dir / "missing.csv"));
    CHECK_THROWS(save_dataset(dir / "x.txt", d));
    std::filesystem::remove_all(dir);
}

TEST_CASE("explanations ndjson round trip") {
    std::vector<Explanation> e{{{0.1, 0.2}, Method::lime, Target::latent(2), "s1"},
                               {{3.0, -1.0}, Method::aee, Target::all(), "s2"}};
    const auto back = explanations_from_ndjson(explanations_to_ndjson(e));
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].values == e[i].values);
        CHECK(back[i].method == e[i].method);
        CHECK(back[i].target == e[i].target);
        CHECK(back[i].series_id == e[i].series_id);
    }
    const auto csv = explanations_to_csv(e);
    CHECK(csv.rfind("series_id,method,target,index,value\n", 0) == 0);
}

TEST_CASE("qm summary json round trip") {
    std::vector<QMResult> results;
    for (int i = 0; i < 8; ++i) {
        results.push_back({"s" + std::to_string(i), i < 5 ? Label::ok : Label::nok, 0.0, 0.1 * i, 0.05 * i + 0.2,
                           true, false});
    }
    const auto s = summarize(Method::shap, results);
    const auto back = qm_summary_from_json(qm_summary_json(s));
    CHECK(back.method == s.method);
    CHECK(back.norm_min == s.norm_min);
    CHECK(back.norm_max == s.norm_max);
    REQUIRE(back.strata.size() == s.strata.size());
    for (std::size_t i = 0; i < s.strata.size(); ++i) {
        CHECK(back.strata[i].stats.median == s.strata[i].stats.median);
        CHECK(back.strata[i].count == s.strata[i].count);
    }
    CHECK(qm_results_to_csv(results).rfind("series_id,label,d_self,d_random,d_xai", 0) == 0);
}

}  // TEST_SUITE
