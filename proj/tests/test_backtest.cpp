#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "refclass/backtest.hpp"
#include "refclass/csv.hpp"
#include "refclass/errors.hpp"
#include "refclass/synthgen.hpp"

using namespace refclass;

namespace {

const VariableKey kOpmar{Base::opmar};
const VariableKey kBeta{Base::beta};
const VariableKey kPe{Base::pe};

const Panel& ragged() {
    static const Panel p = generate(fixture::ragged_spec()).panel;
    return p;
}

BacktestEntry entry(int h, int w, std::vector<VariableKey> vars, Algorithm a = Algorithm::rank_deviation,
                    Combination comb = Combination::lard, bool cor = false) {
    BacktestEntry e;
    e.horizon = h;
    e.window = w;
    e.variables = std::move(vars);
    e.selector.algorithm = a;
    e.selector.size = 0.05;
    e.selector.combination = comb;
    e.selector.correction = cor;
    return e;
}

std::filesystem::path temp_file(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("refclass_test_" + name);
    std::filesystem::remove(p);
    return p;
}

}  // namespace

TEST_CASE("eligible years follow the inequalities") {
    PanelBuilder b;
    for (int y = 1950; y <= 2019; ++y) {
        Observation o;
        o.key = {"A", y};
        o.values[VariableKey{Base::sales}] = 100.0 + y;
        b.add(std::move(o));
    }
    const Panel p = std::move(b).build();
    auto years = [&](int h, int w) {
        const auto c = enumerate_cases(p, h, w, {});
        return std::pair<int, int>{c.front().target.year, c.back().target.year};
    };
    CHECK(years(1, 5) == std::pair<int, int>{1955, 2018});
    CHECK(years(10, 30) == std::pair<int, int>{1989, 2009});
    CHECK(enumerate_cases(p, 10, 70, {}).empty());
}

TEST_CASE("survivorship: a firm absent at t + h is no case") {
    PanelBuilder b;
    for (int y = 1950; y <= 2000; ++y) {
        Observation o;
        o.key = {"A", y};
        o.values[VariableKey{Base::sales}] = 10.0;
        b.add(std::move(o));
    }
    const Panel p = std::move(b).build();
    const auto c = enumerate_cases(p, 3, 5, {});
    CHECK(c.back().target.year == 1997);
}

TEST_CASE("property: case enumeration matches the brute-force oracle") {
    const Panel& p = ragged();
    for (int h : {1, 3, 5, 10}) {
        for (int w : {5, 10, 30}) {
            for (const auto& vars : std::vector<std::vector<VariableKey>>{{}, {kOpmar}, {kOpmar, kBeta, kPe}}) {
                std::set<std::pair<std::string, int>> got;
                for (const auto& c : enumerate_cases(p, h, w, vars)) {
                    got.insert({c.target.firm_id, c.target.year});
                    CHECK(c.realized == realized_growth(p, c.target.firm_id, c.target.year, h));
                }
                CHECK(got == oracle::eligible_cases(p, h, w, vars));
            }
        }
    }
}

TEST_CASE("m plus skipped equals the eligible count") {
    const Panel& p = ragged();
    std::vector<BacktestEntry> entries{
        entry(1, 5, {kOpmar}),
        entry(1, 10, {kOpmar, kBeta}, Algorithm::rank_deviation, Combination::union_, true),
        entry(3, 10, {kOpmar, kBeta}, Algorithm::rank_deviation, Combination::intersection),
        entry(1, 10, {}, Algorithm::market_climate),
        entry(1, 10, {}, Algorithm::group_major),
        entry(1, 10, {}, Algorithm::group_industry),
        entry(1, 20, {}, Algorithm::mc_deciles),
        entry(1, 10, {kOpmar, kBeta, kPe}, Algorithm::pca_rank_deviation),
    };
    entries.back().selector.transform = PreTransform::trim;
    for (const auto& e : entries) {
        const auto r = run_config(p, e);
        CHECK(r.report.m + r.skipped == r.eligible);
        CHECK(r.eligible == enumerate_cases(p, e.horizon, e.window, selector_variables(e.selector, e.variables)).size());
    }
    // the group approach and tight intersections leave many cases skipped
    const auto inter = run_config(p, entries[2]);
    CHECK(inter.skipped > 0);
}

TEST_CASE("an impossible window leaves nothing to score") {
    const auto r = run_config(ragged(), entry(10, 65, {kOpmar}));
    CHECK(r.eligible == 0);
    CHECK(r.report.m == 0);
    CHECK_FALSE(r.usable());
    CHECK(format_result_row(r).find(",NA,NA,NA,0,0") != std::string::npos);
}

TEST_CASE("results do not depend on the worker count") {
    const Panel& p = ragged();
    for (const auto& e : {entry(1, 10, {kOpmar, kBeta}, Algorithm::rank_deviation, Combination::union_),
                          entry(1, 10, {kOpmar, kBeta}, Algorithm::pca_rank_deviation)}) {
        const auto [r1, s1] = run_config_with_sample(p, e, {1});
        for (std::size_t workers : {2u, 8u}) {
            const auto [rn, sn] = run_config_with_sample(p, e, {workers});
            CHECK(sn.values() == s1.values());
            CHECK(rn.report.delta_q == r1.report.delta_q);
            CHECK(rn.report.ks == r1.report.ks);
            CHECK(rn.report.cvm == r1.report.cvm);
            CHECK(rn.skipped == r1.skipped);
        }
    }
}

TEST_CASE("pit sample agrees with per-case forecasts") {
    const Panel& p = ragged();
    const auto e = entry(1, 10, {kOpmar});
    const auto [r, sample] = run_config_with_sample(p, e);
    const auto cases = enumerate_cases(p, 1, 10, e.variables);
    REQUIRE(sample.size() == cases.size() - r.skipped);
    std::size_t i = 0;
    for (const auto& c : cases) {
        ForecastCase fc{c.target, 1, e.variables, 10};
        double expect;
        try {
            const auto cands = build_candidates(p, fc, Availability::all_variables);
            const auto cls = select_rank_deviation(cands, *values_at(p, c.row, e.variables), e.selector);
            std::vector<double> ys = cls.outcomes;
            double below = 0;
            for (double y : ys) below += y <= c.realized;
            expect = below / static_cast<double>(ys.size());
        } catch (const Error&) {
            continue;
        }
        CHECK(sample.values()[i++] == expect);
    }
    CHECK(i == sample.size());
}

TEST_CASE("option grids") {
    const std::vector<VariableKey> two{kOpmar, kBeta}, one{kOpmar};
    CHECK(rank_deviation_grid(1, two).size() == kFullRankDeviationOptions);
    CHECK(kFullRankDeviationOptions == 60);
    CHECK(pca_grid(1, two).size() == kFullPcaOptions);
    CHECK(kFullPcaOptions == 1200);
    const auto single = rank_deviation_grid(1, one);
    CHECK(single.size() == 12);
    for (const auto& e : single) CHECK(e.selector.combination == Combination::lard);
    CHECK_THROWS_AS(pca_grid(1, one), DomainError);
    CHECK_THROWS_AS(rank_deviation_grid(1, std::vector<VariableKey>{}), DomainError);

    const Algorithm bench[] = {Algorithm::market_climate, Algorithm::mc_deciles};
    CHECK(benchmark_grid(1, all_windows(), bench).size() == 8);
    const Algorithm bad[] = {Algorithm::rank_deviation};
    CHECK_THROWS_AS(benchmark_grid(1, all_windows(), bad), DomainError);

    std::set<std::string> keys;
    for (const auto& e : pca_grid(3, two)) keys.insert(e.key());
    CHECK(keys.size() == 1200);
    CHECK(CombinationVariant::parse("union_cor") == CombinationVariant{Combination::union_, true});
    CHECK_THROWS_AS(CombinationVariant::parse("lard_cor"), ParseError);
}

TEST_CASE("ranking puts unusable rows last and breaks ties by key") {
    std::vector<BacktestResult> rs(4);
    rs[0].entry = entry(1, 30, {kOpmar});
    rs[0].report.m = 0;
    rs[1].entry = entry(1, 20, {kOpmar});
    rs[1].report = {10, 0.3, 0, 0, {}};
    rs[2].entry = entry(1, 10, {kOpmar});
    rs[2].report = {10, 0.3, 0, 0, {}};
    rs[3].entry = entry(1, 5, {kOpmar});
    rs[3].report = {10, 0.1, 0, 0, {}};
    rank_results(rs);
    CHECK(rs[0].entry.window == 5);
    CHECK(rs[1].entry.key() < rs[2].entry.key());
    CHECK(rs[3].entry.window == 30);
}

TEST_CASE("config parsing") {
    const auto spec = parse_backtest_spec(R"({
        "panel": "p.csv", "output": "out/r.csv", "horizons": [1, 3],
        "algorithms": ["rank_deviation", "pca_rank_deviation", "market_climate"],
        "variable_sets": [["opmar", "beta"], "opmar", "salesGR_1+opmarDelta_1"],
        "windows": [10], "sizes": [0.05], "combinations": ["lard", "union_cor"],
        "transforms": ["ranks"], "pc_rules": ["2", "mean"], "workers": 2, "quantiles": [0.1, 0.5, 0.9]
    })",
                                          "/data");
    CHECK(spec.panel == std::filesystem::path("/data/p.csv"));
    CHECK(spec.output == std::filesystem::path("/data/out/r.csv"));
    CHECK(spec.variable_sets.size() == 3);
    CHECK(spec.variable_sets[2] == std::vector<VariableKey>{sales_growth(1), opmar_delta(1)});
    CHECK(spec.workers == 2);
    CHECK(spec.levels == std::vector<double>{0.1, 0.5, 0.9});
    const auto entries = expand(spec);
    // per horizon: rank deviation 2 + 1 + 2 sets-x-variants, PCA 2 sets x 2 variants x 2 rules, market climate 1
    CHECK(entries.size() == 2 * (5 + 8 + 1));

    CHECK_THROWS_AS(parse_backtest_spec(R"({"panel": "p.csv", "colour": 1})"), ParseError);
    CHECK_THROWS_AS(parse_backtest_spec(R"({"output": "x"})"), ParseError);
    CHECK_THROWS_AS(parse_backtest_spec(R"({"panel": "p.csv", "horizons": [11]})"), ParseError);
    CHECK_THROWS_AS(parse_backtest_spec(R"({"panel": "p.csv", "variable_sets": ["nope"]})"), ParseError);
    CHECK(parse_backtest_spec(R"({"panel": "p.csv", "variable_sets": ["contemp+salesGR_1"]})").variable_sets[0].size() == 8);
    CHECK_THROWS_AS(parse_backtest_spec(R"({"panel": "p.csv"})"), ParseError);  // rank deviation without sets
    CHECK_THROWS_AS(parse_backtest_spec("[1"), ParseError);
    CHECK_NOTHROW(parse_backtest_spec(R"({"panel": "p.csv", "algorithms": ["market_climate"]})"));
}

TEST_CASE("results file is appended and resumed") {
    const Panel& p = ragged();
    const auto path = temp_file("resume.csv");
    const std::vector<BacktestEntry> first{entry(1, 5, {kOpmar}), entry(1, 10, {kOpmar})};
    const auto a = run_backtest(p, first, {}, path);
    CHECK(a.results.size() == 2);
    CHECK(a.resumed == 0);
    CHECK(completed_keys(path).size() == 2);

    // an interrupted write leaves a truncated last line behind
    {
        std::ofstream out(path, std::ios::app);
        out << "1,rank_deviation,opmar";
    }
    std::vector<BacktestEntry> all = first;
    all.push_back(entry(1, 20, {kOpmar}));
    const auto b = run_backtest(p, all, {}, path);
    CHECK(b.resumed == 2);
    REQUIRE(b.results.size() == 1);
    CHECK(b.results[0].entry.window == 20);
    const auto rows = csv::lines(csv::read_file(path.string()));
    CHECK(rows.front() == results_header());
    CHECK(completed_keys(path).size() == 3);
    std::filesystem::remove(path);

    std::ostringstream out;
    write_results(out, a.results);
    CHECK(out.str().rfind(results_header(), 0) == 0);
}

TEST_CASE("subset enumeration") {
    const std::vector<VariableKey> three{kOpmar, kBeta, kPe};
    const auto subsets = enumerate_subsets(three);
    CHECK(subsets.size() == 7);
    CHECK(subsets.front() == std::vector<VariableKey>{kOpmar});
    CHECK(subsets.back() == three);
    CHECK(enumerate_subsets(contemporaneous_variables()).size() == 127);
}

TEST_CASE("brute force and forward selection on a small panel") {
    const Panel p = generate(fixture::signal_spec(60, 40, 3)).panel;
    OptionGrid grid;
    grid.sizes = {0.05};
    grid.windows = {10};
    grid.variants = {CombinationVariant{Combination::lard, false}};
    const std::vector<VariableKey> three{kOpmar, kBeta, kPe};
    const auto bf = brute_force(p, 1, three, grid);
    CHECK(bf.subsets == 7);
    CHECK(bf.ranked.size() == 7);
    for (std::size_t i = 1; i < bf.ranked.size(); ++i) {
        CHECK(bf.ranked[i - 1].report.delta_q <= bf.ranked[i].report.delta_q);
    }
    CHECK_THROWS_AS(brute_force(p, 1, three, grid, {}, 2), DomainError);

    const std::vector<VariableKey> none;
    const std::vector<VariableKey> pool1{kOpmar};
    const std::vector<VariableKey> seed{kBeta};
    const auto one = forward_selection(p, 1, seed, pool1, grid);
    CHECK(one.stages.size() == 2);  // seeds, then exactly one extension stage
    CHECK(one.stages[1].evaluated.size() == 1);
    CHECK(forward_selection(p, 1, none, pool1, grid).stages.size() == 1);

    const auto fs = forward_selection(p, 1, none, three, grid);
    CHECK(fs.stages.size() <= three.size() + 1);
    CHECK(fs.stages[0].evaluated.size() == 3);
    for (const auto& s : fs.stages) CHECK(s.kept.size() <= 3);
    std::ostringstream out;
    write_forward_report(out, fs);
    CHECK(out.str().rfind("h,stage,rank,variables,kept,delta_q,best_config", 0) == 0);
}

TEST_CASE("nothing to condition on: selectors agree with the marginal") {
    GeneratorSpec g;
    g.firms = 150;
    g.years = 45;
    g.seed = 21;
    g.mechanism.driver.reset();
    const Panel p = generate(g).panel;
    const auto mc = run_config(p, entry(1, 10, {}, Algorithm::market_climate));
    const auto group = run_config(p, entry(1, 10, {}, Algorithm::group_major));
    const auto rdev = run_config(p, entry(1, 10, {kOpmar, kBeta}, Algorithm::rank_deviation, Combination::lard));
    for (const auto* r : {&mc, &group, &rdev}) REQUIRE(r->usable());
    // every selector is calibrated up to the sampling noise of its class ECDF
    for (const auto* r : {&mc, &group, &rdev}) CHECK(r->report.delta_q <= 0.12);
}
