#include "refclass/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "refclass/backtest.hpp"
#include "refclass/csv.hpp"
#include "refclass/derived.hpp"
#include "refclass/errors.hpp"
#include "refclass/forecast.hpp"
#include "refclass/synthgen.hpp"

namespace refclass {

namespace {

std::vector<VariableKey> lags(Base base, int from, int to) {
    std::vector<VariableKey> out;
    for (int l = from; l <= to; ++l) out.emplace_back(base, l);
    return out;
}

std::vector<VariableKey> concat(std::initializer_list<std::vector<VariableKey>> parts) {
    std::vector<VariableKey> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

SelectorConfig pca_union(PreTransform t, PcCountRule rule, double size) {
    SelectorConfig c;
    c.algorithm = Algorithm::pca_rank_deviation;
    c.transform = t;
    c.pc_rule = rule;
    c.combination = Combination::union_;
    c.correction = true;
    c.size = size;
    return c;
}

}  // namespace

Preset preset(std::string_view name) {
    const auto contemp = contemporaneous_variables();
    if (name == "best-h1") {
        return {1, 30, concat({contemp, {sales_growth(1), opmar_delta(1)}}),
                pca_union(PreTransform::ranks, PcCountRule::fixed(3), 0.01)};
    }
    if (name == "best-h3") {
        return {3, 20, concat({contemp, lags(Base::salesGR, 1, 3), lags(Base::opmarDelta, 1, 3)}),
                pca_union(PreTransform::trim, PcCountRule::fixed(3), 0.01)};
    }
    if (name == "best-h5") {
        return {5, 30, concat({contemp, lags(Base::salesGR, 1, 5), lags(Base::opmarDelta, 1, 5)}),
                pca_union(PreTransform::trim, PcCountRule::fixed(2), 0.01)};
    }
    if (name == "best-h10") {
        const std::vector<VariableKey> balance{VariableKey{Base::sales}, VariableKey{Base::opmar},
                                               VariableKey{Base::at}, VariableKey{Base::seq}};
        return {10, 30, concat({balance, lags(Base::salesGR, 1, 5), lags(Base::opmarDelta, 1, 5)}),
                pca_union(PreTransform::trim, PcCountRule::fixed(2), 0.01)};
    }
    throw ParseError("unknown preset '" + std::string(name) + "' (best-h1, best-h3, best-h5, best-h10)");
}

namespace {

/// Thrown for flag combinations CLI11 cannot validate on its own.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<VariableKey> parse_variables(const std::string& text) {
    std::vector<VariableKey> out;
    for (const auto& name : split_list(text)) {
        if (name == "contemp") {
            const auto c = contemporaneous_variables();
            out.insert(out.end(), c.begin(), c.end());
        } else {
            out.push_back(VariableKey::parse(name));
        }
    }
    return out;
}

std::vector<double> parse_levels(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        auto v = csv::parse_real(item, "--quantiles");
        if (!v || !(*v > 0.0 && *v < 1.0)) throw UsageError("quantile levels must lie in (0, 1)");
        out.push_back(*v);
    }
    if (out.empty()) throw UsageError("--quantiles needs at least one level");
    return out;
}

std::vector<int> parse_ints(const std::string& text, const char* flag) {
    std::vector<int> out;
    for (const auto& item : split_list(text)) out.push_back(static_cast<int>(csv::parse_int(item, flag)));
    return out;
}

// Options shared by commands that read a panel.
struct PanelOptions {
    std::string path;
    std::string cpi;
    double cpi_base = 100.0;
    int start_year = YearBounds{}.start_year;
    int end_year = YearBounds{}.end_year;

    void add(CLI::App* cmd) {
        cmd->add_option("--panel", path, "Panel CSV")->required()->check(CLI::ExistingFile);
        cmd->add_option("--cpi", cpi, "CPI CSV (year,index); deflates sales, at and seq")
            ->check(CLI::ExistingFile);
        cmd->add_option("--cpi-base", cpi_base, "Index level of the target dollars");
        cmd->add_option("--start-year", start_year, "First panel year");
        cmd->add_option("--end-year", end_year, "Last panel year");
    }

    Panel load(std::span<const VariableKey> derive) const {
        Panel p = ingest_csv(path, YearBounds{start_year, end_year});
        if (!cpi.empty()) p = deflate(p, read_cpi_csv(cpi), cpi_base);
        return ensure_derived(p, derive);
    }
};

// Selector flags shared by forecast, assess and track.
struct SelectorOptions {
    std::string preset_name;
    std::optional<int> horizon;
    std::string algorithm = "rank_deviation";
    std::string variables;
    int window = 30;
    double size = 0.05;
    std::string combination = "lard";
    bool correction = false;
    std::string transform = "ranks";
    std::string pc_rule = "2";
    CLI::App* cmd = nullptr;

    void add(CLI::App* c) {
        cmd = c;
        c->add_option("--preset", preset_name, "best-h1 | best-h3 | best-h5 | best-h10");
        c->add_option("--horizon", horizon, "Forecast horizon in years")->check(CLI::Range(1, kMaxLag));
        c->add_option("--algorithm", algorithm,
                      "market_climate | group_major | group_industry | mc_deciles | rank_deviation | "
                      "pca_rank_deviation");
        c->add_option("--vars", variables, "Comma-separated reference variables ('contemp' expands)");
        c->add_option("--window", window, "Window length w in years")->check(CLI::PositiveNumber);
        c->add_option("--size", size, "Class size share c")->check(CLI::Range(0.0, 1.0));
        c->add_option("--comb", combination, "lard | union | intersection");
        c->add_flag("--cor", correction, "Correct the class size for union / intersection");
        c->add_option("--transform", transform, "none | root5 | ranks | trim");
        c->add_option("--pcs", pc_rule, "2 | 3 | 75% | 90% | mean");
    }

    Preset resolve() const {
        try {
            return resolve_flags();
        } catch (const ParseError& e) {
            throw UsageError(e.what());
        }
    }

    Preset resolve_flags() const {
        if (!preset_name.empty()) {
            for (const char* flag : {"--algorithm", "--vars", "--window", "--size", "--comb", "--cor",
                                     "--transform", "--pcs"}) {
                if (cmd->count(flag) > 0) {
                    throw UsageError(std::string(flag) + " cannot be combined with --preset");
                }
            }
            Preset p = preset(preset_name);
            if (horizon && *horizon != p.horizon) {
                throw UsageError("--horizon " + std::to_string(*horizon) + " contradicts preset " +
                                 preset_name);
            }
            return p;
        }
        Preset p;
        p.horizon = horizon.value_or(1);
        p.window = window;
        p.variables = parse_variables(variables);
        p.selector.algorithm = parse_algorithm(algorithm);
        p.selector.size = size;
        p.selector.combination = parse_combination(combination);
        p.selector.correction = correction;
        p.selector.transform = parse_pre_transform(transform);
        p.selector.pc_rule = PcCountRule::parse(pc_rule);
        const auto a = p.selector.algorithm;
        if ((a == Algorithm::rank_deviation || a == Algorithm::pca_rank_deviation) && p.variables.empty()) {
            throw UsageError("--vars is required for " + algorithm);
        }
        return p;
    }
};

std::vector<VariableKey> needed_columns(const Preset& p) {
    auto keys = p.variables;
    keys.push_back(sales_growth(p.horizon));
    return keys;
}

void print_forecast(std::ostream& out, const CaseForecast& cf, const Preset& p,
                    std::span<const double> levels, bool as_csv) {
    const auto& f = cf.forecast;
    const auto table = base_rates(f);
    if (as_csv) {
        out << "section,label,value\n";
        out << "meta,firm_id," << csv::quote(f.target().firm_id) << '\n';
        out << "meta,year," << f.target().year << '\n';
        out << "meta,horizon," << f.horizon() << '\n';
        out << "meta,candidates," << cf.candidates << '\n';
        out << "meta,class_size," << cf.ref_class.size() << '\n';
        for (double q : levels) out << "quantile," << format_number(q) << ',' << format_number(f.quantile(q)) << '\n';
        for (const auto& b : table.bins) {
            out << "base_rate," << csv::quote(b.label) << ',' << format_number(b.percent) << '\n';
        }
        out << "summary,trimmed_mean," << format_number(table.trimmed_mean) << '\n';
        out << "summary,median," << format_number(table.median) << '\n';
        out << "summary,trimmed_std," << format_number(table.trimmed_std) << '\n';
        out << "summary,q0.025," << format_number(table.q025) << '\n';
        out << "summary,q0.975," << format_number(table.q975) << '\n';
        return;
    }
    std::string vars;
    for (const auto& v : p.variables) vars += (vars.empty() ? "" : ",") + v.name();
    out << "Forecast for " << f.target().firm_id << ", base year " << f.target().year << ", horizon "
        << f.horizon() << "y\n";
    out << "  selector:        " << p.selector.describe() << ", w=" << p.window << '\n';
    out << "  variables:       " << (vars.empty() ? "-" : vars) << '\n';
    out << "  candidates:      " << cf.candidates << '\n';
    out << "  reference class: " << cf.ref_class.size() << '\n';
    out << "\nCumulative " << f.horizon() << "-year sales growth quantiles (%)\n";
    out << std::fixed << std::setprecision(2);
    for (double q : levels) out << "  " << std::setw(6) << q << "  " << std::setw(10) << f.quantile(q) << '\n';
    out << "\nBase rates, compound annual growth (%)\n";
    for (const auto& b : table.bins) {
        out << "  " << std::left << std::setw(10) << b.label << std::right << std::setw(8) << b.percent << '\n';
    }
    out << "  trimmed mean " << table.trimmed_mean << ", median " << table.median << ", trimmed std "
        << table.trimmed_std << ", 2.5% " << table.q025 << ", 97.5% " << table.q975 << '\n';
    out.unsetf(std::ios::floatfield);
}

struct LabeledEstimate {
    std::string label;
    double value = 0.0;
};

/// Reads `firm_id,year,horizon,estimate_pct` rows (a bare `estimate` column and
/// an optional `label` also work). Rows naming another case are ignored.
std::vector<LabeledEstimate> read_estimates(const std::string& path, const FirmYear& target, int horizon) {
    const auto rows = csv::lines(csv::read_file(path));
    if (rows.empty()) throw ParseError(path + ": empty estimates file");
    const auto header = csv::split(rows[0]);
    auto find = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    };
    auto value_col = find("estimate_pct");
    if (!value_col) value_col = find("estimate");
    const auto label_col = find("label");
    const auto firm_col = find("firm_id");
    const auto year_col = find("year");
    const auto horizon_col = find("horizon");
    if (!value_col) throw ParseError(path + ": header needs an 'estimate_pct' column");
    std::vector<LabeledEstimate> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto fields = csv::split(rows[r]);
        const std::string where = path + ":" + std::to_string(r + 1);
        if (fields.size() != header.size()) throw ParseError(where + ": wrong number of fields");
        if (firm_col && fields[*firm_col] != target.firm_id) continue;
        if (year_col && csv::parse_int(fields[*year_col], where) != target.year) continue;
        if (horizon_col && csv::parse_int(fields[*horizon_col], where) != horizon) continue;
        const auto v = csv::parse_real(fields[*value_col], where);
        if (!v) throw ParseError(where + ": missing estimate");
        out.push_back({label_col ? fields[*label_col] : std::to_string(r), *v});
    }
    if (out.empty()) {
        throw ParseError(path + ": no estimates for " + target.firm_id + " " + std::to_string(target.year) +
                         " at horizon " + std::to_string(horizon));
    }
    return out;
}

/// Cumulative growth implied by `years` of compound annual growth `rate`.
double cumulative_from_cagr(double rate, int years) {
    return (std::pow(1.0 + rate / 100.0, years) - 1.0) * 100.0;
}

struct ResultRow {
    std::vector<std::string> fields;
    std::optional<double> delta_q;
    std::string key;
};

std::vector<ResultRow> read_results(const std::string& path) {
    const auto rows = csv::lines(csv::read_file(path));
    if (rows.empty() || rows[0] != results_header()) throw ParseError(path + ": not a results file");
    std::vector<ResultRow> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        ResultRow row;
        row.fields = csv::split(rows[r]);
        const std::string where = path + ":" + std::to_string(r + 1);
        if (row.fields.size() != 14) throw ParseError(where + ": expected 14 fields");
        if (row.fields[9] != "NA") row.delta_q = csv::parse_real(row.fields[9], where);
        for (std::size_t f = 0; f < 9; ++f) row.key += (f ? "," : "") + row.fields[f];
        out.push_back(std::move(row));
    }
    std::stable_sort(out.begin(), out.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.delta_q.has_value() != b.delta_q.has_value()) return a.delta_q.has_value();
        if (a.delta_q && *a.delta_q != *b.delta_q) return *a.delta_q < *b.delta_q;
        return a.key < b.key;
    });
    return out;
}

void write_text_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        width.resize(std::max(width.size(), r.size()));
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            out << std::left << std::setw(static_cast<int>(width[i]) + (i + 1 < r.size() ? 2 : 0)) << r[i];
        }
        out << std::right << '\n';
    }
}

std::ofstream open_output(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    return f;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Reference class forecasting of corporate sales growth", "refclass"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    // ingest ---------------------------------------------------------------
    PanelOptions ingest_panel;
    std::string ingest_out;
    auto* ingest = app.add_subcommand("ingest", "Validate a panel CSV and write it in canonical form");
    ingest_panel.add(ingest);
    ingest->add_option("--out", ingest_out, "Output CSV (default: standard output)");

    // derive ---------------------------------------------------------------
    PanelOptions derive_panel;
    std::string derive_out, derive_growth_lags, derive_delta_lags;
    auto* derive = app.add_subcommand("derive", "Deflate and add lagged growth / margin-change columns");
    derive_panel.add(derive);
    derive->add_option("--growth", derive_growth_lags, "salesGR lags, e.g. 1,3,5 (default 1..10)");
    derive->add_option("--opmar-delta", derive_delta_lags, "opmarDelta lags (default 1..10)");
    derive->add_option("--out", derive_out, "Output CSV (default: standard output)");

    // forecast / assess / track ---------------------------------------------
    PanelOptions fc_panel, as_panel, tr_panel;
    SelectorOptions fc_sel, as_sel, tr_sel;
    std::string fc_firm, as_firm, tr_firm, fc_quantiles, fc_format = "text", as_estimates, as_format = "text";
    int fc_year = 0, as_year = 0, tr_from = 0, tr_to = 0;
    bool as_cagr = false;
    double as_low = WarningThresholds{}.low, as_high = WarningThresholds{}.high;

    auto* forecast = app.add_subcommand("forecast", "Distributional forecast for one firm-year");
    fc_panel.add(forecast);
    fc_sel.add(forecast);
    forecast->add_option("--firm", fc_firm, "Firm id")->required();
    forecast->add_option("--year", fc_year, "Base year t")->required();
    forecast->add_option("--quantiles", fc_quantiles, "Comma-separated quantile levels");
    forecast->add_option("--format", fc_format, "text | csv")->check(CLI::IsMember({"text", "csv"}));

    auto* assess = app.add_subcommand("assess", "PIT of external estimates under the forecast");
    as_panel.add(assess);
    as_sel.add(assess);
    assess->add_option("--firm", as_firm, "Firm id")->required();
    assess->add_option("--year", as_year, "Base year t")->required();
    assess->add_option("--estimates", as_estimates, "CSV with firm_id,year,horizon,estimate_pct rows")
        ->required()
        ->check(CLI::ExistingFile);
    assess->add_flag("--cagr", as_cagr, "Estimates are compound annual rates, not cumulative growth");
    assess->add_option("--warn-low", as_low, "PIT below which an estimate is flagged");
    assess->add_option("--warn-high", as_high, "PIT above which an estimate is flagged");
    assess->add_option("--format", as_format, "text | csv")->check(CLI::IsMember({"text", "csv"}));

    auto* track = app.add_subcommand("track", "Forecast quantiles and realizations over a range of base years");
    tr_panel.add(track);
    tr_sel.add(track);
    track->add_option("--firm", tr_firm, "Firm id")->required();
    track->add_option("--from", tr_from, "First base year")->required();
    track->add_option("--to", tr_to, "Last base year")->required();

    // backtest ---------------------------------------------------------------
    std::string bt_config, bt_output, bt_quantiles;
    std::size_t bt_workers = 0;
    auto* backtest = app.add_subcommand("backtest", "Run every configuration of a backtest config file");
    backtest->add_option("--config", bt_config, "Backtest JSON config")->required()->check(CLI::ExistingFile);
    backtest->add_option("--workers", bt_workers, "Worker threads (overrides the config)")
        ->check(CLI::PositiveNumber);
    backtest->add_option("--output", bt_output, "Results CSV (overrides the config)");
    backtest->add_option("--quantiles", bt_quantiles, "Quantile levels for delta_q");

    // search -----------------------------------------------------------------
    std::string se_mode, se_config, se_seeds, se_pool, se_out;
    int se_horizon = 1;
    std::size_t se_cap = 0, se_workers = 0;
    auto* search = app.add_subcommand("search", "Forward selection or brute force over reference variables");
    search->add_option("mode", se_mode, "forward | brute")->required()->check(CLI::IsMember({"forward", "brute"}));
    search->add_option("--config", se_config, "Backtest JSON config (panel and option grid)")
        ->required()
        ->check(CLI::ExistingFile);
    search->add_option("--horizon", se_horizon, "Forecast horizon")->required()->check(CLI::Range(1, kMaxLag));
    search->add_option("--seeds", se_seeds, "forward: seed variables (default: three best singles)");
    search->add_option("--pool", se_pool,
                       "Variables to search (default: those in the config's variable sets, else contemp)");
    search->add_option("--cap", se_cap, "brute: maximum number of variables (overrides the config)");
    search->add_option("--workers", se_workers, "Worker threads")->check(CLI::PositiveNumber);
    search->add_option("--out", se_out, "Output CSV (default: standard output)");

    // synth ------------------------------------------------------------------
    std::string sy_spec, sy_out;
    std::optional<std::uint64_t> sy_seed;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic panel and its oracle sidecar");
    synth->add_option("--spec", sy_spec, "Generator JSON spec")->required()->check(CLI::ExistingFile);
    synth->add_option("--out", sy_out, "Output directory")->required();
    synth->add_option("--seed", sy_seed, "Overrides the spec seed");

    // report -----------------------------------------------------------------
    std::string re_results, re_format = "text";
    std::size_t re_top = 0;
    auto* report = app.add_subcommand("report", "Rank the rows of a results CSV by delta_q");
    report->add_option("--results", re_results, "Results CSV")->required()->check(CLI::ExistingFile);
    report->add_option("--top", re_top, "Rows to show (default: all)");
    report->add_option("--format", re_format, "text | csv")->check(CLI::IsMember({"text", "csv"}));

    std::vector<std::string> args;
    for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
    try {
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        if (rc == 0) return exit_code::ok;
        const CLI::App* sub = nullptr;
        for (const auto* s : app.get_subcommands()) sub = s;
        err << '\n' << (sub ? sub->help() : app.help());
        return exit_code::usage;
    }

    try {
        if (ingest->parsed()) {
            const Panel p = ingest_panel.load({});
            if (ingest_out.empty()) {
                export_csv(p, out);
            } else {
                export_csv(p, std::filesystem::path(ingest_out));
            }
            std::set<std::string> firms;
            for (std::size_t r = 0; r < p.size(); ++r) firms.insert(p.firm(r));
            err << "ingested " << p.size() << " firm-years of " << firms.size() << " firms\n";
        } else if (derive->parsed()) {
            const auto growth = derive_growth_lags.empty() ? std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}
                                                           : parse_ints(derive_growth_lags, "--growth");
            const auto delta = derive_delta_lags.empty() ? std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}
                                                         : parse_ints(derive_delta_lags, "--opmar-delta");
            std::vector<VariableKey> keys;
            for (int l : growth) keys.push_back(sales_growth(l));
            for (int l : delta) keys.push_back(opmar_delta(l));
            const Panel p = derive_panel.load(keys);
            if (derive_out.empty()) {
                export_csv(p, out);
            } else {
                export_csv(p, std::filesystem::path(derive_out));
            }
        } else if (forecast->parsed()) {
            const Preset p = fc_sel.resolve();
            const auto levels = fc_quantiles.empty() ? report_quantile_levels() : parse_levels(fc_quantiles);
            const Panel panel = fc_panel.load(needed_columns(p));
            const ForecastCase fc{{fc_firm, fc_year}, p.horizon, p.variables, p.window};
            const auto cf = forecast_case(panel, fc, p.selector);
            print_forecast(out, cf, p, levels, fc_format == "csv");
        } else if (assess->parsed()) {
            const Preset p = as_sel.resolve();
            if (!(as_low >= 0.0 && as_low < as_high && as_high <= 1.0)) {
                throw UsageError("warning thresholds must satisfy 0 <= low < high <= 1");
            }
            const auto estimates = read_estimates(as_estimates, {as_firm, as_year}, p.horizon);
            const Panel panel = as_panel.load(needed_columns(p));
            const ForecastCase fc{{as_firm, as_year}, p.horizon, p.variables, p.window};
            const auto cf = forecast_case(panel, fc, p.selector);
            std::vector<double> values;
            for (const auto& e : estimates) {
                values.push_back(as_cagr ? cumulative_from_cagr(e.value, p.horizon) : e.value);
            }
            const auto a = assess_estimates(cf.forecast, values, {as_low, as_high});
            if (as_format == "csv") {
                out << "label,estimate,cumulative,pit\n";
                for (std::size_t i = 0; i < estimates.size(); ++i) {
                    out << csv::quote(estimates[i].label) << ',' << format_number(estimates[i].value) << ','
                        << format_number(values[i]) << ',' << format_number(a.pits[i]) << '\n';
                }
                out << "coverage,,," << format_number(a.coverage) << '\n';
                out << "warning,,," << (a.warning ? 1 : 0) << '\n';
            } else {
                std::vector<std::vector<std::string>> rows{{"label", "estimate", "cumulative %", "PIT"}};
                for (std::size_t i = 0; i < estimates.size(); ++i) {
                    rows.push_back({estimates[i].label, format_number(estimates[i].value),
                                    format_number(values[i]), format_number(a.pits[i])});
                }
                write_text_table(out, rows);
                out << "\nreference class size " << cf.ref_class.size() << "; coverage of the estimate range "
                    << format_number(a.coverage) << '\n';
                if (a.warning) {
                    out << "WARNING: an estimate lies in the outer tails of the reference class ("
                        << "PIT < " << format_number(as_low) << " or > " << format_number(as_high) << ")\n";
                }
            }
        } else if (track->parsed()) {
            const Preset p = tr_sel.resolve();
            const Panel panel = tr_panel.load(needed_columns(p));
            const auto records =
                historic_track(panel, tr_firm, tr_from, tr_to, p.horizon, p.window, p.variables, p.selector);
            out << "year,class_size,q10,q25,q50,q75,q90,realized,pit,skipped,reason\n";
            auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
            for (const auto& r : records) {
                out << r.year << ',';
                if (r.skipped) {
                    out << ",,,,,," << opt(r.realized) << ",,1," << csv::quote(r.reason) << '\n';
                    continue;
                }
                out << r.class_size << ',' << format_number(r.q10) << ',' << format_number(r.q25) << ','
                    << format_number(r.q50) << ',' << format_number(r.q75) << ',' << format_number(r.q90) << ','
                    << opt(r.realized) << ',' << opt(r.pit) << ",0,\n";
            }
        } else if (backtest->parsed()) {
            auto spec = read_backtest_spec(bt_config);
            if (bt_workers > 0) spec.workers = bt_workers;
            if (!bt_output.empty()) spec.output = bt_output;
            if (!bt_quantiles.empty()) spec.levels = parse_levels(bt_quantiles);
            const auto entries = expand(spec);
            const Panel panel = load_backtest_panel(spec, entries);
            const auto run = run_backtest(panel, entries, RunOptions{spec.workers, spec.levels}, spec.output);
            err << "ran " << run.results.size() << " configurations (" << run.resumed
                << " already complete) -> " << spec.output.string() << '\n';
            write_results(out, run.results);
        } else if (search->parsed()) {
            auto spec = read_backtest_spec(se_config);
            if (se_workers > 0) spec.workers = se_workers;
            if (se_cap > 0) spec.brute_force_cap = se_cap;
            std::vector<VariableKey> pool;
            if (!se_pool.empty()) {
                pool = parse_variables(se_pool);
            } else {
                std::set<VariableKey> seen;
                for (const auto& s : spec.variable_sets) {
                    for (const auto& k : s) {
                        if (seen.insert(k).second) pool.push_back(k);
                    }
                }
                if (pool.empty()) pool = contemporaneous_variables();
            }
            const auto seeds = parse_variables(se_seeds);
            spec.horizons = {se_horizon};
            std::vector<BacktestEntry> probes;
            for (const auto& k : pool) probes.push_back(BacktestEntry{se_horizon, 1, {k}, {}});
            for (const auto& k : seeds) probes.push_back(BacktestEntry{se_horizon, 1, {k}, {}});
            const Panel panel = load_backtest_panel(spec, probes);
            const RunOptions options{spec.workers, spec.levels};
            std::ofstream file;
            if (!se_out.empty()) file = open_output(se_out);
            std::ostream& sink = se_out.empty() ? out : file;
            if (se_mode == "forward") {
                const auto rep = forward_selection(panel, se_horizon, seeds, pool, spec.grid, options);
                write_forward_report(sink, rep);
                err << "forward selection: " << rep.stages.size() << " stages\n";
            } else {
                if (!seeds.empty()) throw UsageError("--seeds only applies to forward selection");
                const auto rep = brute_force(panel, se_horizon, pool, spec.grid, options, spec.brute_force_cap);
                write_results(sink, rep.ranked);
                err << "brute force: " << rep.subsets << " subsets, " << rep.ranked.size()
                    << " configurations\n";
            }
        } else if (synth->parsed()) {
            auto spec = read_generator_spec(sy_spec);
            if (sy_seed) spec.seed = *sy_seed;
            const auto generated = generate(spec);
            const std::filesystem::path dir(sy_out);
            std::filesystem::create_directories(dir);
            export_csv(generated.panel, dir / "panel.csv");
            auto sidecar = open_output((dir / "oracle.csv").string());
            write_oracle_csv(generated.oracle, sidecar);
            err << "wrote " << generated.panel.size() << " firm-years and " << generated.oracle.size()
                << " oracle entries to " << dir.string() << '\n';
        } else if (report->parsed()) {
            auto rows = read_results(re_results);
            if (re_top > 0 && rows.size() > re_top) rows.resize(re_top);
            if (re_format == "csv") {
                out << results_header() << '\n';
                for (const auto& r : rows) {
                    for (std::size_t f = 0; f < r.fields.size(); ++f) out << (f ? "," : "") << r.fields[f];
                    out << '\n';
                }
            } else {
                std::vector<std::vector<std::string>> table{split_list(results_header())};
                for (const auto& r : rows) table.push_back(r.fields);
                write_text_table(out, table);
            }
        }
    } catch (const UsageError& e) {
        err << "refclass: " << e.what() << '\n';
        return exit_code::usage;
    } catch (const Error& e) {
        err << "refclass: " << e.what() << '\n';
        return exit_code::data;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "refclass: " << e.what() << '\n';
        return exit_code::data;
    }
    return exit_code::ok;
}

}  // namespace refclass
