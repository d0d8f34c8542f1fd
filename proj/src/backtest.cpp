#include "refclass/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "refclass/csv.hpp"
#include "refclass/derived.hpp"
#include "refclass/errors.hpp"
#include "refclass/forecast.hpp"

namespace refclass {

namespace {

bool is_rank_based(Algorithm a) {
    return a == Algorithm::rank_deviation || a == Algorithm::pca_rank_deviation;
}

std::string join_names(std::span<const VariableKey> vars) {
    if (vars.empty()) return "-";
    std::string out;
    for (const auto& v : vars) {
        if (!out.empty()) out += '+';
        out += v.name();
    }
    return out;
}

std::string stat_text(double v, bool usable) { return usable ? format_number(v) : "NA"; }

}  // namespace

// --------------------------------------------------------------- entries

std::string BacktestEntry::variables_label() const {
    const auto vars = selector_variables(selector, variables);
    return join_names(vars);
}

std::string BacktestEntry::key() const {
    const bool pca = selector.algorithm == Algorithm::pca_rank_deviation;
    const bool ranked = is_rank_based(selector.algorithm);
    std::string transf = "-";
    if (pca) {
        transf = to_string(selector.transform);
        if (selector.transform == PreTransform::trim &&
            selector.trim_standardization == TrimStandardization::full_sample) {
            transf += "_fullstd";
        }
    }
    std::string cor = "-";
    if (ranked && selector.combination != Combination::lard) cor = selector.correction ? "yes" : "no";

    std::string out = std::to_string(horizon);
    out += ',' + to_string(selector.algorithm);
    out += ',' + variables_label();
    out += ',' + transf;
    out += ',' + (pca ? selector.pc_rule.name() : std::string("-"));
    out += ',' + (ranked ? to_string(selector.combination) : std::string("-"));
    out += ',' + cor;
    out += ',' + std::to_string(window);
    out += ',' + (ranked ? format_number(selector.size) : std::string("-"));
    return out;
}

// ------------------------------------------------------------------ cases

std::vector<EligibleCase> enumerate_cases(const Panel& panel, int horizon, int window,
                                          std::span<const VariableKey> variables) {
    std::vector<EligibleCase> out;
    if (horizon < 1 || window < 1) return out;
    const int first = panel.start_year() + window + horizon - 1;
    const int last = panel.end_year() - horizon;
    if (first > last) return out;

    std::vector<const Panel::Column*> cols;
    for (const auto& k : variables) cols.push_back(k.base == Base::sic ? nullptr : panel.column(k));

    const auto [begin, _] = panel.year_rows(first);
    const auto [__, end] = panel.year_rows(last);
    for (std::size_t row = begin; row < end; ++row) {
        bool complete = true;
        for (std::size_t v = 0; v < variables.size() && complete; ++v) {
            complete = variables[v].base == Base::sic ? panel.sic(row).has_value()
                                                      : cols[v] && (*cols[v])[row].has_value();
        }
        if (!complete) continue;
        auto y = realized_growth(panel, panel.firm(row), panel.year(row), horizon);
        if (!y) continue;
        out.push_back({panel.key(row), row, *y});
    }
    return out;
}

// --------------------------------------------------------------- running

std::pair<BacktestResult, PitSample> run_config_with_sample(
    const Panel& panel, const BacktestEntry& entry, const RunOptions& options,
    const std::vector<std::optional<double>>* outcomes) {
    const auto vars = selector_variables(entry.selector, entry.variables);
    const auto cases = enumerate_cases(panel, entry.horizon, entry.window, vars);

    std::vector<std::optional<double>> own_outcomes;
    if (!outcomes) {
        own_outcomes = forward_outcomes(panel, entry.horizon);
        outcomes = &own_outcomes;
    }
    const Availability availability = availability_for(entry.selector);

    // Cases arrive sorted by year; every year shares one candidate set.
    std::vector<std::pair<std::size_t, std::size_t>> groups;
    for (std::size_t i = 0; i < cases.size();) {
        std::size_t j = i;
        while (j < cases.size() && cases[j].target.year == cases[i].target.year) ++j;
        groups.emplace_back(i, j);
        i = j;
    }

    std::vector<std::optional<double>> pits(cases.size());
    auto process = [&](std::size_t g) {
        const auto [lo, hi] = groups[g];
        ForecastCase fc{cases[lo].target, entry.horizon, vars, entry.window};
        CandidateSet cands;
        std::optional<PreparedSelector> selector;
        try {
            cands = build_candidates(panel, fc, availability, outcomes);
            selector.emplace(cands, entry.selector);
        } catch (const InsufficientCandidatesError&) {
            return;
        } catch (const DegenerateError&) {
            return;
        }
        for (std::size_t c = lo; c < hi; ++c) {
            auto target = values_at(panel, cases[c].row, vars);
            if (!target) continue;
            try {
                // Equals pit(make_forecast(class), realized) without sorting the class.
                const auto members = selector->members(*target);
                const auto& ys = cands.outcomes();
                std::size_t below = 0;
                for (auto i : members) below += ys[i] <= cases[c].realized ? 1 : 0;
                pits[c] = static_cast<double>(below) / static_cast<double>(members.size());
            } catch (const UndersizedClassError&) {
            } catch (const DegenerateError&) {
            }
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, groups.size()));
    if (workers <= 1) {
        for (std::size_t g = 0; g < groups.size(); ++g) process(g);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t g = next++; g < groups.size(); g = next++) {
                    try {
                        process(g);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    PitSample sample;
    std::size_t skipped = 0;
    for (const auto& p : pits) {
        if (p) {
            sample.add(*p);
        } else {
            ++skipped;
        }
    }
    BacktestResult result;
    result.entry = entry;
    result.report = score(sample, options.levels);
    result.eligible = cases.size();
    result.skipped = skipped;
    return {std::move(result), std::move(sample)};
}

BacktestResult run_config(const Panel& panel, const BacktestEntry& entry, const RunOptions& options,
                          const std::vector<std::optional<double>>* outcomes) {
    return run_config_with_sample(panel, entry, options, outcomes).first;
}

// ------------------------------------------------------------------ grids

std::string CombinationVariant::name() const {
    if (combination == Combination::lard) return "lard";
    return to_string(combination) + (correction ? "_cor" : "");
}

CombinationVariant CombinationVariant::parse(std::string_view text) {
    for (const auto& v : all_combination_variants()) {
        if (v.name() == text) return v;
    }
    throw ParseError("unknown combination variant '" + std::string(text) + "'");
}

std::vector<CombinationVariant> all_combination_variants() {
    return {{Combination::lard, false},
            {Combination::union_, false},
            {Combination::union_, true},
            {Combination::intersection, false},
            {Combination::intersection, true}};
}

const std::vector<double>& all_sizes() {
    static const std::vector<double> sizes{0.05, 0.025, 0.01};
    return sizes;
}

const std::vector<int>& all_windows() {
    static const std::vector<int> windows{5, 10, 20, 30};
    return windows;
}

namespace {

bool is_full(const OptionGrid& grid) {
    return grid.sizes == all_sizes() && grid.windows == all_windows() &&
           grid.variants == all_combination_variants();
}

void check_grid(const OptionGrid& grid) {
    if (grid.sizes.empty() || grid.windows.empty() || grid.variants.empty()) {
        throw DomainError("option grid axes must not be empty");
    }
    for (double c : grid.sizes) {
        if (!(c > 0.0 && c <= 1.0)) throw DomainError("class size share must lie in (0, 1]");
    }
    for (int w : grid.windows) {
        if (w < 1) throw DomainError("window length must be positive");
    }
}

}  // namespace

std::vector<BacktestEntry> rank_deviation_grid(int horizon, std::span<const VariableKey> variables,
                                               const OptionGrid& grid) {
    if (variables.empty()) throw DomainError("rank deviation needs at least one variable");
    check_grid(grid);
    std::vector<CombinationVariant> variants = grid.variants;
    if (variables.size() == 1) variants = {CombinationVariant{}};  // all variants coincide

    std::vector<BacktestEntry> out;
    for (double size : grid.sizes) {
        for (int w : grid.windows) {
            for (const auto& v : variants) {
                BacktestEntry e;
                e.horizon = horizon;
                e.window = w;
                e.variables.assign(variables.begin(), variables.end());
                e.selector.algorithm = Algorithm::rank_deviation;
                e.selector.size = size;
                e.selector.combination = v.combination;
                e.selector.correction = v.correction;
                out.push_back(std::move(e));
            }
        }
    }
    if (variables.size() > 1 && is_full(grid) && out.size() != kFullRankDeviationOptions) {
        throw std::logic_error("full rank-deviation grid must hold 60 options");
    }
    return out;
}

std::vector<BacktestEntry> pca_grid(int horizon, std::span<const VariableKey> variables,
                                    const OptionGrid& grid) {
    if (variables.size() < 2) throw DomainError("PCA rank deviation needs at least two variables");
    check_grid(grid);
    if (grid.transforms.empty() || grid.pc_rules.empty()) {
        throw DomainError("option grid axes must not be empty");
    }
    std::vector<BacktestEntry> out;
    for (double size : grid.sizes) {
        for (int w : grid.windows) {
            for (const auto& v : grid.variants) {
                for (auto t : grid.transforms) {
                    for (const auto& rule : grid.pc_rules) {
                        BacktestEntry e;
                        e.horizon = horizon;
                        e.window = w;
                        e.variables.assign(variables.begin(), variables.end());
                        e.selector.algorithm = Algorithm::pca_rank_deviation;
                        e.selector.size = size;
                        e.selector.combination = v.combination;
                        e.selector.correction = v.correction;
                        e.selector.transform = t;
                        e.selector.pc_rule = rule;
                        out.push_back(std::move(e));
                    }
                }
            }
        }
    }
    if (is_full(grid) && grid.transforms == all_pre_transforms() && grid.pc_rules == all_pc_rules() &&
        out.size() != kFullPcaOptions) {
        throw std::logic_error("full PCA grid must hold 1200 options");
    }
    return out;
}

std::vector<BacktestEntry> benchmark_grid(int horizon, std::span<const int> windows,
                                          std::span<const Algorithm> algorithms) {
    std::vector<BacktestEntry> out;
    for (auto a : algorithms) {
        if (is_rank_based(a)) throw DomainError(to_string(a) + " is not a benchmark algorithm");
        for (int w : windows) {
            BacktestEntry e;
            e.horizon = horizon;
            e.window = w;
            e.selector.algorithm = a;
            out.push_back(std::move(e));
        }
    }
    return out;
}

void rank_results(std::vector<BacktestResult>& results) {
    std::vector<std::pair<std::string, std::size_t>> keys;
    keys.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) keys.emplace_back(results[i].entry.key(), i);
    std::vector<std::size_t> order(results.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = results[a];
        const auto& rb = results[b];
        if (ra.usable() != rb.usable()) return ra.usable();
        if (ra.usable() && ra.report.delta_q != rb.report.delta_q) {
            return ra.report.delta_q < rb.report.delta_q;
        }
        return keys[a].first < keys[b].first;
    });
    std::vector<BacktestResult> sorted;
    sorted.reserve(results.size());
    for (auto i : order) sorted.push_back(std::move(results[i]));
    results = std::move(sorted);
}

// ------------------------------------------------------------ config file

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

template <class T>
std::vector<T> list_of(const json& j, const char* field) {
    if (!j.is_array() || j.empty()) {
        throw ParseError(std::string("config field '") + field + "' must be a non-empty array");
    }
    std::vector<T> out;
    for (const auto& item : j) out.push_back(item.get<T>());
    return out;
}

std::vector<VariableKey> parse_variable_set(const json& j) {
    std::vector<VariableKey> out;
    // "contemp" stands for the seven contemporaneous variables
    auto add = [&out](std::string_view name) {
        if (name == "contemp") {
            const auto c = contemporaneous_variables();
            out.insert(out.end(), c.begin(), c.end());
        } else {
            out.push_back(VariableKey::parse(name));
        }
    };
    if (j.is_string()) {
        const auto text = j.get<std::string>();
        std::size_t start = 0;
        while (start <= text.size()) {
            auto plus = text.find('+', start);
            if (plus == std::string::npos) plus = text.size();
            add(std::string_view(text).substr(start, plus - start));
            start = plus + 1;
        }
    } else if (j.is_array()) {
        for (const auto& item : j) add(item.get<std::string>());
    } else {
        throw ParseError("a variable set must be a string or an array of names");
    }
    if (out.empty()) throw ParseError("empty variable set");
    return out;
}

}  // namespace

BacktestSpec parse_backtest_spec(std::string_view json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("backtest config: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("backtest config must be a JSON object");

    static const std::set<std::string> known{
        "panel",   "output",    "cpi",       "cpi_base",      "start_year", "end_year",
        "horizons", "windows",  "sizes",     "algorithms",    "variable_sets", "combinations",
        "transforms", "pc_rules", "workers", "seed",          "quantiles",  "brute_force_cap"};
    for (const auto& [k, _] : j.items()) {
        if (!known.contains(k)) throw ParseError("unknown backtest config field '" + k + "'");
    }

    BacktestSpec spec;
    try {
        if (!j.contains("panel")) throw ParseError("backtest config needs 'panel'");
        spec.panel = resolve(base_dir, j.at("panel").get<std::string>());
        spec.output = resolve(base_dir, j.value("output", std::string("results.csv")));
        if (j.contains("cpi")) spec.cpi = resolve(base_dir, j.at("cpi").get<std::string>());
        spec.cpi_base = j.value("cpi_base", spec.cpi_base);
        spec.bounds.start_year = j.value("start_year", spec.bounds.start_year);
        spec.bounds.end_year = j.value("end_year", spec.bounds.end_year);
        if (j.contains("horizons")) spec.horizons = list_of<int>(j["horizons"], "horizons");
        if (j.contains("windows")) spec.grid.windows = list_of<int>(j["windows"], "windows");
        if (j.contains("sizes")) spec.grid.sizes = list_of<double>(j["sizes"], "sizes");
        if (j.contains("algorithms")) {
            spec.algorithms.clear();
            for (const auto& a : list_of<std::string>(j["algorithms"], "algorithms")) {
                spec.algorithms.push_back(parse_algorithm(a));
            }
        }
        if (j.contains("variable_sets")) {
            if (!j["variable_sets"].is_array()) throw ParseError("'variable_sets' must be an array");
            for (const auto& s : j["variable_sets"]) spec.variable_sets.push_back(parse_variable_set(s));
        }
        if (j.contains("combinations")) {
            spec.grid.variants.clear();
            for (const auto& c : list_of<std::string>(j["combinations"], "combinations")) {
                spec.grid.variants.push_back(CombinationVariant::parse(c));
            }
        }
        if (j.contains("transforms")) {
            spec.grid.transforms.clear();
            for (const auto& t : list_of<std::string>(j["transforms"], "transforms")) {
                spec.grid.transforms.push_back(parse_pre_transform(t));
            }
        }
        if (j.contains("pc_rules")) {
            spec.grid.pc_rules.clear();
            for (const auto& r : list_of<std::string>(j["pc_rules"], "pc_rules")) {
                spec.grid.pc_rules.push_back(PcCountRule::parse(r));
            }
        }
        if (j.contains("workers")) {
            const auto w = j["workers"].get<long>();
            if (w < 1) throw ParseError("'workers' must be at least 1");
            spec.workers = static_cast<std::size_t>(w);
        }
        spec.seed = j.value("seed", spec.seed);
        if (j.contains("quantiles")) spec.levels = list_of<double>(j["quantiles"], "quantiles");
        if (j.contains("brute_force_cap")) {
            spec.brute_force_cap = j["brute_force_cap"].get<std::size_t>();
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("backtest config: ") + e.what());
    }

    for (int h : spec.horizons) {
        if (h < 1 || h > kMaxLag) throw ParseError("horizon " + std::to_string(h) + " outside 1..10");
    }
    for (double q : spec.levels) {
        if (!(q > 0.0 && q < 1.0)) throw ParseError("quantile levels must lie in (0, 1)");
    }
    if (spec.bounds.start_year > spec.bounds.end_year) throw ParseError("start_year after end_year");
    const bool needs_sets = std::any_of(spec.algorithms.begin(), spec.algorithms.end(), is_rank_based);
    if (needs_sets && spec.variable_sets.empty()) {
        throw ParseError("rank-deviation algorithms need 'variable_sets'");
    }
    check_grid(spec.grid);
    return spec;
}

BacktestSpec read_backtest_spec(const std::filesystem::path& path) {
    return parse_backtest_spec(csv::read_file(path.string()), path.parent_path());
}

std::vector<BacktestEntry> expand(const BacktestSpec& spec) {
    std::vector<BacktestEntry> out;
    for (int h : spec.horizons) {
        for (auto a : spec.algorithms) {
            std::vector<BacktestEntry> part;
            if (a == Algorithm::rank_deviation) {
                for (const auto& set : spec.variable_sets) {
                    auto g = rank_deviation_grid(h, set, spec.grid);
                    part.insert(part.end(), g.begin(), g.end());
                }
            } else if (a == Algorithm::pca_rank_deviation) {
                for (const auto& set : spec.variable_sets) {
                    if (set.size() < 2) continue;
                    auto g = pca_grid(h, set, spec.grid);
                    part.insert(part.end(), g.begin(), g.end());
                }
            } else {
                const Algorithm one[] = {a};
                part = benchmark_grid(h, spec.grid.windows, one);
            }
            out.insert(out.end(), part.begin(), part.end());
        }
    }
    return out;
}

Panel load_backtest_panel(const BacktestSpec& spec, std::span<const BacktestEntry> entries) {
    Panel panel = ingest_csv(spec.panel, spec.bounds);
    if (spec.cpi) panel = deflate(panel, read_cpi_csv(*spec.cpi), spec.cpi_base);
    std::set<VariableKey> needed;
    for (int h : spec.horizons) needed.insert(sales_growth(h));
    for (const auto& e : entries) needed.insert(e.variables.begin(), e.variables.end());
    const std::vector<VariableKey> keys(needed.begin(), needed.end());
    return ensure_derived(panel, keys);
}

// ------------------------------------------------------------ results CSV

const std::string& results_header() {
    static const std::string header =
        "h,algorithm,ref_var,transf,n_pc,comb,cor,w,size,delta_q,ks,cvm,m,skipped";
    return header;
}

std::string format_result_row(const BacktestResult& r) {
    const bool ok = r.usable();
    return r.entry.key() + ',' + stat_text(r.report.delta_q, ok) + ',' + stat_text(r.report.ks, ok) +
           ',' + stat_text(r.report.cvm, ok) + ',' + std::to_string(r.report.m) + ',' +
           std::to_string(r.skipped);
}

void write_results(std::ostream& out, std::span<const BacktestResult> results) {
    out << results_header() << '\n';
    for (const auto& r : results) out << format_result_row(r) << '\n';
}

std::set<std::string> completed_keys(const std::filesystem::path& results_csv) {
    std::set<std::string> keys;
    if (!std::filesystem::exists(results_csv)) return keys;
    const auto rows = csv::lines(csv::read_file(results_csv.string()));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto fields = csv::split(rows[i]);
        if (fields.size() != 14) continue;  // a row cut short by an interruption
        std::string key = fields[0];
        for (std::size_t f = 1; f < 9; ++f) key += ',' + fields[f];
        keys.insert(std::move(key));
    }
    return keys;
}

BacktestRun run_backtest(const Panel& panel, std::span<const BacktestEntry> entries,
                         const RunOptions& options, const std::filesystem::path& results_csv) {
    BacktestRun run;
    const auto done = completed_keys(results_csv);

    const bool fresh = !std::filesystem::exists(results_csv) || std::filesystem::file_size(results_csv) == 0;
    if (!fresh) {
        // Drop a trailing partial line so appended rows start on their own line.
        const auto text = csv::read_file(results_csv.string());
        if (!text.empty() && text.back() != '\n') {
            std::ofstream fix(results_csv, std::ios::app);
            fix << '\n';
        }
    }
    std::ofstream out(results_csv, std::ios::app);
    if (!out) throw Error("cannot write results to " + results_csv.string());
    if (fresh) out << results_header() << '\n' << std::flush;

    std::map<int, std::vector<std::optional<double>>> outcomes;
    for (const auto& e : entries) {
        if (done.contains(e.key())) {
            ++run.resumed;
            continue;
        }
        auto it = outcomes.find(e.horizon);
        if (it == outcomes.end()) it = outcomes.emplace(e.horizon, forward_outcomes(panel, e.horizon)).first;
        auto result = run_config(panel, e, options, &it->second);
        out << format_result_row(result) << '\n' << std::flush;
        run.results.push_back(std::move(result));
    }
    rank_results(run.results);
    return run;
}

// -------------------------------------------------------------- searching

double VariableSetScore::delta_q() const {
    return best ? best->report.delta_q : std::numeric_limits<double>::infinity();
}

namespace {

struct Evaluator {
    const Panel& panel;
    int horizon;
    const OptionGrid& grid;
    const RunOptions& options;
    std::vector<std::optional<double>> outcomes;

    VariableSetScore score(std::vector<VariableKey> vars) const {
        VariableSetScore s;
        s.variables = std::move(vars);
        std::vector<BacktestResult> results;
        for (const auto& e : rank_deviation_grid(horizon, s.variables, grid)) {
            results.push_back(run_config(panel, e, options, &outcomes));
        }
        rank_results(results);
        if (!results.empty() && results.front().usable()) s.best = results.front();
        return s;
    }
};

void rank_scores(std::vector<VariableSetScore>& scores) {
    std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
        if (a.delta_q() != b.delta_q()) return a.delta_q() < b.delta_q();
        return join_names(a.variables) < join_names(b.variables);
    });
}

std::vector<std::vector<VariableKey>> best_three(const std::vector<VariableSetScore>& ranked) {
    std::vector<std::vector<VariableKey>> kept;
    for (const auto& s : ranked) {
        if (kept.size() == 3) break;
        if (s.best) kept.push_back(s.variables);
    }
    return kept;
}

}  // namespace

ForwardSelectionReport forward_selection(const Panel& panel, int horizon,
                                         std::span<const VariableKey> seeds,
                                         std::span<const VariableKey> pool, const OptionGrid& grid,
                                         const RunOptions& options) {
    Evaluator eval{panel, horizon, grid, options, forward_outcomes(panel, horizon)};
    ForwardSelectionReport report;
    report.horizon = horizon;

    std::vector<VariableKey> universe;
    auto add_unique = [&](const VariableKey& k) {
        if (std::find(universe.begin(), universe.end(), k) == universe.end()) universe.push_back(k);
    };
    for (const auto& k : seeds) add_unique(k);
    for (const auto& k : pool) add_unique(k);

    SearchStage stage0;
    for (const auto& k : seeds.empty() ? pool : seeds) stage0.evaluated.push_back(eval.score({k}));
    rank_scores(stage0.evaluated);
    stage0.kept = best_three(stage0.evaluated);
    stage0.improved = !stage0.evaluated.empty() && stage0.evaluated.front().best.has_value();
    double best = stage0.evaluated.empty() ? std::numeric_limits<double>::infinity()
                                           : stage0.evaluated.front().delta_q();
    report.stages.push_back(std::move(stage0));

    int idle = 0;
    while (idle < 2) {
        const auto& previous = report.stages.back();
        std::set<std::vector<VariableKey>> seen;
        SearchStage stage;
        stage.stage = previous.stage + 1;
        for (const auto& base : previous.kept) {
            for (const auto& k : universe) {
                if (std::find(base.begin(), base.end(), k) != base.end()) continue;
                auto vars = base;
                vars.push_back(k);
                std::sort(vars.begin(), vars.end());
                if (!seen.insert(vars).second) continue;
                stage.evaluated.push_back(eval.score(std::move(vars)));
            }
        }
        if (stage.evaluated.empty()) break;
        rank_scores(stage.evaluated);
        stage.kept = best_three(stage.evaluated);
        const double stage_best = stage.evaluated.front().delta_q();
        stage.improved = stage_best < best;
        if (stage.improved) {
            best = stage_best;
            idle = 0;
        } else {
            ++idle;
        }
        report.stages.push_back(std::move(stage));
        if (report.stages.back().kept.empty()) break;
    }
    return report;
}

std::vector<std::vector<VariableKey>> enumerate_subsets(std::span<const VariableKey> variables) {
    if (variables.size() >= 31) throw DomainError("too many variables to enumerate subsets");
    std::vector<std::vector<VariableKey>> out;
    const std::uint32_t n = static_cast<std::uint32_t>(variables.size());
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<VariableKey> subset;
        for (std::uint32_t b = 0; b < n; ++b) {
            if (mask & (1u << b)) subset.push_back(variables[b]);
        }
        out.push_back(std::move(subset));
    }
    return out;
}

BruteForceReport brute_force(const Panel& panel, int horizon, std::span<const VariableKey> variables,
                             const OptionGrid& grid, const RunOptions& options, std::size_t cap) {
    if (variables.size() > cap) {
        throw DomainError("brute force over " + std::to_string(variables.size()) +
                          " variables exceeds the cap of " + std::to_string(cap) +
                          "; raise the cap explicitly to proceed");
    }
    const auto outcomes = forward_outcomes(panel, horizon);
    BruteForceReport report;
    const auto subsets = enumerate_subsets(variables);
    report.subsets = subsets.size();
    for (const auto& s : subsets) {
        for (const auto& e : rank_deviation_grid(horizon, s, grid)) {
            report.ranked.push_back(run_config(panel, e, options, &outcomes));
        }
    }
    rank_results(report.ranked);
    return report;
}

void write_forward_report(std::ostream& out, const ForwardSelectionReport& report) {
    out << "h,stage,rank,variables,kept,delta_q,best_config\n";
    for (const auto& stage : report.stages) {
        for (std::size_t i = 0; i < stage.evaluated.size(); ++i) {
            const auto& s = stage.evaluated[i];
            const bool kept =
                std::find(stage.kept.begin(), stage.kept.end(), s.variables) != stage.kept.end();
            out << report.horizon << ',' << stage.stage << ',' << (i + 1) << ','
                << join_names(s.variables) << ',' << (kept ? "yes" : "no") << ','
                << (s.best ? format_number(s.delta_q()) : std::string("NA")) << ','
                << (s.best ? csv::quote(s.best->entry.key()) : std::string("NA")) << '\n';
        }
    }
}

}  // namespace refclass
