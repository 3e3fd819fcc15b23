#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "aee/autoencoder.hpp"
#include "aee/errors.hpp"
#include "aee/quality.hpp"
#include "support/oracles.hpp"
#include "support/toys.hpp"

using namespace aee;

namespace {

AEModel tiny_model(std::uint64_t seed) {
    AEConfig c;
    c.encoder_blocks = {{3, 5, 0.0, true}, {3, 3, 0.0, true}};
    c.latent_dim = 3;
    c.decoder_blocks = {{3, 3, 0.0, true}, {3, 5, 0.0, true}};
    return build_model(c, 64, seed);
}

Dataset toy_data(std::size_t ok, std::size_t nok) {
    Dataset d;
    for (std::size_t i = 0; i < ok + nok; ++i) {
        d.push_back({"s" + std::to_string(i), toys::toy_series(64, i), i < ok ? Label::ok : Label::nok});
    }
    return d;
}

std::vector<double> ramp(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 0.5 + static_cast<double>(i);
    return v;
}

}  // namespace

TEST_SUITE("quality") {

TEST_CASE("perturbation count") {
    CHECK(perturb_count(1000, 0.1) == 100);
    CHECK(perturb_count(1024, 0.1) == 103);
    CHECK(perturb_count(5, 1.0) == 5);
    CHECK_THROWS_AS(perturb_count(10, 0.0), ParameterError);
    CHECK_THROWS_AS(perturb_count(10, 1.5), ParameterError);
}

TEST_CASE("explanation-guided selection changes only the chosen window") {
    const auto x = ramp(100);
    std::vector<double> imp(100, 0.0);
    for (std::size_t i = 40; i < 50; ++i) imp[i] = 1.0;
    for (auto s : {PerturbStrategy::zero, PerturbStrategy::shuffle, PerturbStrategy::mean}) {
        const auto p = perturb_by_explanation(x, imp, {0.1, s, 3});
        CHECK(p.positions.size() == 10);
        CHECK(p.positions.front() == 40);
        CHECK(p.positions.back() == 49);
        for (std::size_t i = 0; i < 100; ++i) {
            if (i < 40 || i >= 50) CHECK(p.values[i] == x[i]);
        }
    }
}

TEST_CASE("zero strategy over everything and shuffle multiset") {
    const auto x = ramp(20);
    std::vector<double> imp(20);
    for (std::size_t i = 0; i < 20; ++i) imp[i] = std::sin(static_cast<double>(i));
    const auto z = perturb_by_explanation(x, imp, {1.0, PerturbStrategy::zero, 1});
    for (double v : z.values) CHECK(v == 0.0);

    const auto s = perturb_by_explanation(x, imp, {0.5, PerturbStrategy::shuffle, 2});
    auto a = s.values, b = x;
    std::sort(a.begin(), a.end());
    CHECK(a == b);
}

TEST_CASE("ties in importance take the first indices") {
    const auto x = ramp(30);
    const auto p = perturb_by_explanation(x, std::vector<double>(30, 0.5), {0.1, PerturbStrategy::zero, 0});
    CHECK(p.tied);
    CHECK(p.positions == std::vector<std::size_t>{0, 1, 2});

    std::vector<double> imp(30, 0.0);
    imp[7] = imp[3] = imp[20] = 2.0;
    imp[25] = 1.0;
    const auto q = perturb_by_explanation(x, imp, {0.1, PerturbStrategy::zero, 0});
    CHECK(q.positions == std::vector<std::size_t>{3, 7, 20});
    CHECK_FALSE(q.tied);
    CHECK_THROWS_AS(perturb_by_explanation(x, std::vector<double>(29, 0.0), {}), DimensionError);
}

TEST_CASE("random perturbation") {
    const auto x = ramp(50);
    const auto full = perturb_random(x, {1.0, PerturbStrategy::shuffle, 4});
    auto sorted = full.values;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == x);
    CHECK(full.positions.size() == 50);

    const auto a = perturb_random(x, {0.2, PerturbStrategy::shuffle, 8});
    const auto b = perturb_random(x, {0.2, PerturbStrategy::shuffle, 8});
    CHECK(a.values == b.values);
    CHECK(a.positions == b.positions);
    CHECK(a.positions.size() == 10);
    CHECK(std::set<std::size_t>(a.positions.begin(), a.positions.end()).size() == 10);
    CHECK(perturb_random(x, {0.2, PerturbStrategy::shuffle, 9}).positions != a.positions);
}

TEST_CASE("random positions overlap a fixed set at rate k") {
    // 10 of 100 positions against a fixed set of 30: hypergeometric with
    // mean k*m = 3.
    const std::size_t n = 100, m = 30, draws = 10000;
    const double k = 0.1;
    const std::vector<double> x(n, 1.0);
    double total = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
        const auto p = perturb_random(x, {k, PerturbStrategy::zero, derive_seed(77, d)});
        for (auto i : p.positions) total += i < m ? 1.0 : 0.0;
    }
    const double picked = k * n;
    const double var = picked * (double(m) / n) * (1 - double(m) / n) * (n - picked) / (n - 1);
    CHECK(std::abs(total / draws - k * m) <= 3.0 * std::sqrt(var / draws));
}

TEST_CASE("latent distance is a metric") {
    const auto model = tiny_model(1);
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        const auto a = toys::toy_series(64, rng.next_u64());
        const auto b = toys::toy_series(64, rng.next_u64());
        const auto c = toys::toy_series(64, rng.next_u64());
        CHECK(qm_distance(model, a, a) == 0.0);
        CHECK(qm_distance(model, a, b) == qm_distance(model, b, a));
        CHECK(qm_distance(model, a, c) <= qm_distance(model, a, b) + qm_distance(model, b, c) + 1e-15);
    }
}

TEST_CASE("iqr statistics") {
    const auto s = iqr_stats(std::vector<double>{1, 2, 3, 4, 5});
    CHECK(s.q1 == 2.0);
    CHECK(s.median == 3.0);
    CHECK(s.q3 == 4.0);
    CHECK(s.lower_fence == -1.0);
    CHECK(s.upper_fence == 7.0);
    const auto one = iqr_stats(std::vector<double>{2.5});
    CHECK(one.q1 == 2.5);
    CHECK(one.q3 == 2.5);
    CHECK(one.iqr() == 0.0);
    CHECK_THROWS(iqr_stats(std::vector<double>{}));

    Rng rng(6);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> v(1 + rng.below(40));
        for (auto& e : v) e = rng.normal() * 10.0;
        const auto st = iqr_stats(v);
        CHECK(std::abs(st.q1 - oracle::quantile(v, 0.25)) <= 1e-12);
        CHECK(std::abs(st.median - oracle::quantile(v, 0.5)) <= 1e-12);
        CHECK(std::abs(st.q3 - oracle::quantile(v, 0.75)) <= 1e-12);
        CHECK(st.q1 <= st.median);
        CHECK(st.median <= st.q3);
    }
}

TEST_CASE("constant encoder gives zero distances") {
    auto model = tiny_model(3);
    auto& last = model.encoder.layers().back();
    std::fill(last.weights.begin(), last.weights.end(), 0.0);
    const auto data = toy_data(4, 2);
    ExplainerConfig cfg;
    const auto ev = evaluate(model, data, Method::gradcam, importance_for(model, Method::lrp, cfg), QMConfig{});
    for (const auto& r : ev.results) {
        CHECK(r.d_self == 0.0);
        CHECK(r.d_random == 0.0);
        CHECK(r.d_xai == 0.0);
        CHECK(r.ordering_satisfied);
    }
}

TEST_CASE("evaluate is reproducible and stratified") {
    const auto model = tiny_model(4);
    const auto data = toy_data(6, 3);
    ExplainerConfig cfg;
    QMConfig qc;
    qc.perturbation.seed = 11;
    const auto imp = importance_for(model, Method::gradcam, cfg);
    const auto a = evaluate(model, data, Method::gradcam, imp, qc);
    const auto b = evaluate(model, data, Method::gradcam, imp, qc);
    REQUIRE(a.results.size() == 9);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(a.results[i].d_self == 0.0);
        CHECK(a.results[i].d_random == b.results[i].d_random);
        CHECK(a.results[i].d_xai == b.results[i].d_xai);
    }
    CHECK(a.summary.at(Label::ok, Condition::noise).count == 6);
    CHECK(a.summary.at(Label::nok, Condition::xai).count == 3);
    for (const auto& st : a.summary.strata) {
        CHECK(st.stats.q1 <= st.stats.median);
        CHECK(st.stats.median <= st.stats.q3);
        CHECK(st.stats.q3 <= 1.0);
        CHECK(st.stats.q1 >= 0.0);
    }
    CHECK(a.ordering_rate(Label::nok).has_value());

    const auto only_ok = evaluate(model, toy_data(4, 0), Method::gradcam, imp, qc);
    CHECK(only_ok.summary.at(Label::nok, Condition::noise).empty);
    CHECK_FALSE(only_ok.ordering_rate(Label::nok).has_value());
}

TEST_CASE("instance selection keeps every NOK") {
    const auto data = toy_data(50, 5);
    const auto idx = select_instances(data, 10, 3);
    CHECK(idx.size() == 15);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    std::size_t nok = 0;
    for (auto i : idx) nok += data[i].is_nok();
    CHECK(nok == 5);
    CHECK(select_instances(data, 100, 3).size() == 55);
}

}  // TEST_SUITE
