#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "refclass/derived.hpp"
#include "refclass/errors.hpp"
#include "refclass/forecast.hpp"
#include "refclass/synthgen.hpp"

using namespace refclass;

namespace {

ReferenceClass rc(std::vector<double> outcomes) {
    ReferenceClass r;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        r.indices.push_back(i);
        r.members.push_back({"F" + std::to_string(i), 1990});
    }
    r.outcomes = std::move(outcomes);
    r.provenance = "test";
    return r;
}

std::vector<double> one_to(std::size_t n) {
    std::vector<double> v(n);
    std::iota(v.begin(), v.end(), 1.0);
    return v;
}

double total(const BaseRateTable& t) {
    double s = 0.0;
    for (const auto& b : t.bins) s += b.percent;
    return s;
}

double percent_of(const BaseRateTable& t, const std::string& label) {
    for (const auto& b : t.bins) {
        if (b.label == label) return b.percent;
    }
    FAIL("no bin " << label);
    return 0.0;
}

}  // namespace

TEST_CASE("forecast construction") {
    const auto f = make_forecast(rc(one_to(20)), 1);
    CHECK(f.quantile(0.5) == 10);
    CHECK(f.size() == 20);
    auto shuffled = one_to(25);
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(1));
    const auto sf = make_forecast(rc(shuffled), 1);
    CHECK(std::is_sorted(sf.outcomes().begin(), sf.outcomes().end()));

    const auto flat = make_forecast(rc(std::vector<double>(30, 4.0)), 3);
    for (double a : {0.01, 0.5, 0.99}) CHECK(flat.quantile(a) == 4.0);

    auto with_floor = one_to(20);
    with_floor[0] = -100.0;
    CHECK(make_forecast(rc(with_floor), 1).outcomes().front() == -100.0);
    with_floor[0] = -100.5;
    CHECK_THROWS_AS(make_forecast(rc(with_floor), 1), DomainError);
    CHECK_THROWS_AS(make_forecast(rc(one_to(19)), 1), UndersizedClassError);
    CHECK_THROWS_AS(make_forecast(rc(one_to(20)), 0), DomainError);
}

TEST_CASE("pit") {
    const auto f = make_forecast(rc(one_to(20)), 1);
    CHECK(pit(f, 10) == 0.5);
    CHECK(pit(f, 0) == 0.0);
    CHECK(pit(f, 5.5) == 0.25);
    CHECK(pit(f, 1e6) == 1.0);
}

TEST_CASE("estimate assessment") {
    const auto f = make_forecast(rc(one_to(20)), 1);
    const auto median = assess_estimates(f, std::vector<double>{10.0});
    CHECK(median.pits == std::vector<double>{0.5});
    CHECK_FALSE(median.warning);

    const auto high = assess_estimates(f, std::vector<double>{25.0});
    CHECK(high.pits == std::vector<double>{1.0});
    CHECK(high.warning);

    // estimates spanning outcomes 6..9: 9/20 - 5/20
    CHECK(assess_estimates(f, std::vector<double>{6, 9, 7}).coverage == doctest::Approx(0.20));
    CHECK(assess_estimates(f, std::vector<double>{-3, -3}).coverage == 0.0);
    CHECK(assess_estimates(f, std::vector<double>{10}, {0.6, 0.9}).warning);
    CHECK_THROWS_AS(assess_estimates(f, std::vector<double>{}), DomainError);
}

TEST_CASE("base-rate bins") {
    const auto bins = base_rate_bins();
    REQUIRE(bins.size() == 16);
    CHECK(bins.front().label == "<=-25");
    CHECK_FALSE(bins.front().lower.has_value());
    CHECK(bins.front().upper == -25.0);
    CHECK(bins.back().label == ">45");
    CHECK(bins.back().lower == 45.0);
    CHECK_FALSE(bins.back().upper.has_value());
    for (std::size_t i = 1; i + 1 < bins.size(); ++i) {
        CHECK(*bins[i].lower == -25.0 + 5.0 * static_cast<double>(i - 1));
        CHECK(*bins[i].upper == *bins[i].lower + 5.0);
    }
    CHECK(bins[1].label == "]-25,-20]");
    CHECK(bins[14].label == "]40,45]");
}

TEST_CASE("base-rate tables") {
    std::vector<double> v;
    for (int copy = 0; copy < 5; ++copy) {
        for (double x : {-30.0, -22.0, 3.0, 50.0}) v.push_back(x);
    }
    const auto t = base_rates(make_forecast(rc(v), 1));
    CHECK(percent_of(t, "<=-25") == 25.0);
    CHECK(percent_of(t, "]-25,-20]") == 25.0);
    CHECK(percent_of(t, "]0,5]") == 25.0);
    CHECK(percent_of(t, ">45") == 25.0);
    CHECK(total(t) == 100.0);

    // edges are inclusive on the right
    const auto edge = base_rates(make_forecast(rc(std::vector<double>(20, 5.0)), 1));
    CHECK(percent_of(edge, "]0,5]") == 100.0);
    const auto low = base_rates(make_forecast(rc(std::vector<double>(20, -25.0)), 1));
    CHECK(percent_of(low, "<=-25") == 100.0);

    // multi-year tables bin compound annual rates: 20% over two years is 9.54% a year
    const auto two = base_rates(make_forecast(rc(std::vector<double>(20, 20.0)), 2));
    CHECK(percent_of(two, "]5,10]") == 100.0);
    CHECK(two.median == doctest::Approx(std::sqrt(1.2) * 100.0 - 100.0));
    CHECK(annualized_growth(-100.0, 5) == -100.0);
}

TEST_CASE("base-rate summary rows use the 2.5% trimming rule") {
    const auto t = base_rates(make_forecast(rc(one_to(40)), 1));
    CHECK(t.trimmed_mean == 20.5);
    CHECK(t.trimmed_std == doctest::Approx(std::sqrt(123.5)));
    CHECK(t.median == 20.0);
    CHECK(t.q025 == 1.0);
    CHECK(t.q975 == 39.0);
}

TEST_CASE("property: pit steps and bins partition") {
    std::mt19937_64 rng(77);
    std::lognormal_distribution<double> ln(0.0, 0.5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(20 + static_cast<std::size_t>(trial) * 7);
        for (double& x : v) x = (ln(rng) - 1.0) * 100.0;
        const auto f = make_forecast(rc(v), 1 + trial % 5);
        const double n = static_cast<double>(f.size());
        double prev = 0.0;
        for (double y = -110; y <= 300; y += 0.7) {
            const double p = pit(f, y);
            CHECK(p >= prev);
            CHECK(std::abs(p * n - std::round(p * n)) <= 1e-9);
            prev = p;
        }
        CHECK(std::abs(total(base_rates(f)) - 100.0) <= 1e-9);
        const auto a = assess_estimates(f, std::vector<double>{v[0], v[1], v[2]});
        CHECK(a.coverage >= 0.0);
        CHECK(a.coverage <= 1.0);
    }
}

TEST_CASE("historic track on a synthetic panel") {
    GeneratorSpec g;
    g.firms = 120;
    g.years = 40;
    g.seed = 17;
    g.mechanism.driver.reset();
    const auto sp = generate(g);
    SelectorConfig mc;
    mc.algorithm = Algorithm::market_climate;

    std::size_t inside = 0, counted = 0;
    for (const char* firm : {"F001", "F002", "F003", "F004", "F005", "F006", "F007", "F008"}) {
        const auto track = historic_track(sp.panel, firm, 1950, 1988, 1, 10, {}, mc);
        CHECK(track.size() == 39);
        for (const auto& r : track) {
            if (r.year < 1960) {
                CHECK(r.skipped);  // the window reaches before 1950
                continue;
            }
            REQUIRE_FALSE(r.skipped);
            CHECK(r.q10 <= r.q25);
            CHECK(r.q25 <= r.q50);
            CHECK(r.q50 <= r.q75);
            CHECK(r.q75 <= r.q90);
            if (r.realized) {
                ++counted;
                inside += *r.realized >= r.q25 && *r.realized <= r.q75;
            }
        }
    }
    const double share = static_cast<double>(inside) / static_cast<double>(counted);
    CHECK(share > 0.4);
    CHECK(share < 0.6);
    CHECK_THROWS_AS(historic_track(sp.panel, "nobody", 1960, 1970, 1, 10, {}, mc), DomainError);
}

TEST_CASE("forecast_case end to end") {
    GeneratorSpec g;
    g.firms = 60;
    g.years = 30;
    const auto sp = generate(g);
    SelectorConfig s;
    s.size = 0.1;
    const ForecastCase fc{{"F10", 1975}, 1, {VariableKey{Base::opmar}}, 10};
    const auto cf = forecast_case(sp.panel, fc, s);
    CHECK(cf.candidates == 600);
    CHECK(cf.ref_class.size() == 60);
    CHECK(cf.forecast.target() == fc.target);
    for (const auto& m : cf.ref_class.members) {
        CHECK(m.year >= 1965);
        CHECK(m.year <= 1974);
    }
    CHECK_THROWS_AS(forecast_case(sp.panel, {{"F999", 1975}, 1, fc.variables, 10}, s), DomainError);
}
