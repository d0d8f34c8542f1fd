#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "refclass/calibration.hpp"
#include "refclass/panel.hpp"
#include "refclass/selection.hpp"

namespace refclass {

/// One configuration row of a backtest: horizon, window, reference variables
/// and selector options.
struct BacktestEntry {
    int horizon = 1;
    int window = 30;
    std::vector<VariableKey> variables;
    SelectorConfig selector;

    /// Variables joined by '+', or "-" when the algorithm reads none.
    std::string variables_label() const;
    /// The nine identifying result columns joined by ','.
    std::string key() const;
};

struct BacktestResult {
    BacktestEntry entry;
    CalibrationReport report;
    std::size_t eligible = 0;
    std::size_t skipped = 0;

    bool usable() const { return report.m > 0; }
};

/// An initial firm-year that qualifies for the backtest.
struct EligibleCase {
    FirmYear target;
    std::size_t row = 0;
    double realized = 0.0;
};

/// Every (i, t) with all `variables` observed at t, firm i present at t + h
/// with observed h-year growth, and start + w + h - 1 <= t <= end - h.
/// Sorted by (t, firm_id).
std::vector<EligibleCase> enumerate_cases(const Panel& panel, int horizon, int window,
                                          std::span<const VariableKey> variables);

struct RunOptions {
    std::size_t workers = 1;
    std::vector<double> levels = default_quantile_levels();
};

/// Runs one configuration. Cases whose candidate set or class is too small
/// (or whose PCA fit is degenerate) are counted as skipped. The PIT sample is
/// assembled in case order, so the result does not depend on `workers`.
BacktestResult run_config(const Panel& panel, const BacktestEntry& entry, const RunOptions& options = {},
                          const std::vector<std::optional<double>>* outcomes = nullptr);

/// Same as run_config but also returns the PIT sample.
std::pair<BacktestResult, PitSample> run_config_with_sample(
    const Panel& panel, const BacktestEntry& entry, const RunOptions& options = {},
    const std::vector<std::optional<double>>* outcomes = nullptr);

/// One of the five LARD / union / intersection variants.
struct CombinationVariant {
    Combination combination = Combination::lard;
    bool correction = false;

    std::string name() const;  // lard, union, union_cor, intersection, intersection_cor
    static CombinationVariant parse(std::string_view text);
    bool operator==(const CombinationVariant&) const = default;
};

std::vector<CombinationVariant> all_combination_variants();
const std::vector<double>& all_sizes();
const std::vector<int>& all_windows();

/// Option axes searched for rank deviation and PCA rank deviation.
struct OptionGrid {
    std::vector<double> sizes = all_sizes();
    std::vector<int> windows = all_windows();
    std::vector<CombinationVariant> variants = all_combination_variants();
    std::vector<PreTransform> transforms = all_pre_transforms();
    std::vector<PcCountRule> pc_rules = all_pc_rules();
};

inline constexpr std::size_t kFullRankDeviationOptions = 60;
inline constexpr std::size_t kFullPcaOptions = 1200;

/// sizes x windows x variants; a single variable collapses the variants to LARD.
std::vector<BacktestEntry> rank_deviation_grid(int horizon, std::span<const VariableKey> variables,
                                               const OptionGrid& grid = {});
/// sizes x windows x variants x transforms x PC rules.
std::vector<BacktestEntry> pca_grid(int horizon, std::span<const VariableKey> variables,
                                    const OptionGrid& grid = {});
/// Market climate, group (major, industry) and MC entries for every window.
std::vector<BacktestEntry> benchmark_grid(int horizon, std::span<const int> windows,
                                          std::span<const Algorithm> algorithms);

/// Sorted by delta_q; unusable results last; ties broken by key().
void rank_results(std::vector<BacktestResult>& results);

/// Backtest configuration file contents.
struct BacktestSpec {
    std::filesystem::path panel;
    std::filesystem::path output;
    std::optional<std::filesystem::path> cpi;
    double cpi_base = 100.0;
    YearBounds bounds;
    std::vector<int> horizons{1};
    std::vector<Algorithm> algorithms{Algorithm::rank_deviation};
    std::vector<std::vector<VariableKey>> variable_sets;
    OptionGrid grid;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
    std::vector<double> levels = default_quantile_levels();
    std::size_t brute_force_cap = 7;
};

/// Parses the JSON config. Relative paths resolve against `base_dir`.
BacktestSpec parse_backtest_spec(std::string_view json_text,
                                 const std::filesystem::path& base_dir = {});
BacktestSpec read_backtest_spec(const std::filesystem::path& path);

/// Every entry the spec describes, in a deterministic order.
std::vector<BacktestEntry> expand(const BacktestSpec& spec);

/// Loads the panel named by the spec, deflates it if a CPI file is given and
/// derives every lagged variable the entries and horizons need.
Panel load_backtest_panel(const BacktestSpec& spec, std::span<const BacktestEntry> entries);

// ----------------------------------------------------------- results CSV

const std::string& results_header();
std::string format_result_row(const BacktestResult& r);
void write_results(std::ostream& out, std::span<const BacktestResult> results);

/// Keys of rows already present in a results file (empty if it does not exist).
std::set<std::string> completed_keys(const std::filesystem::path& results_csv);

struct BacktestRun {
    std::vector<BacktestResult> results;  // this run's results, ranked
    std::size_t resumed = 0;              // entries skipped because already written
};

/// Runs every entry not yet present in `results_csv`, appending one row per
/// finished entry so an interrupted run resumes where it stopped.
BacktestRun run_backtest(const Panel& panel, std::span<const BacktestEntry> entries,
                         const RunOptions& options, const std::filesystem::path& results_csv);

// ------------------------------------------------------------ searching

struct VariableSetScore {
    std::vector<VariableKey> variables;
    std::optional<BacktestResult> best;  // lowest delta_q among usable options

    double delta_q() const;
};

struct SearchStage {
    int stage = 0;                            // 0 = single variables
    std::vector<VariableSetScore> evaluated;  // ranked
    std::vector<std::vector<VariableKey>> kept;
    bool improved = false;
};

struct ForwardSelectionReport {
    int horizon = 1;
    std::vector<SearchStage> stages;
};

/// Forward selection over rank-deviation options. Stage 0 scores the seeds
/// (or, with no seeds, every pool variable on its own and keeps the best
/// three). Each further stage extends the three best sets of the previous
/// stage by every unused variable of seeds ∪ pool. The search stops after
/// two consecutive stages without improving the best delta_q.
ForwardSelectionReport forward_selection(const Panel& panel, int horizon,
                                         std::span<const VariableKey> seeds,
                                         std::span<const VariableKey> pool, const OptionGrid& grid,
                                         const RunOptions& options = {});

/// All non-empty subsets in lexicographic bitmask order.
std::vector<std::vector<VariableKey>> enumerate_subsets(std::span<const VariableKey> variables);

struct BruteForceReport {
    std::size_t subsets = 0;
    std::vector<BacktestResult> ranked;
};

/// Every non-empty subset crossed with the rank-deviation option grid.
/// Throws DomainError when |variables| exceeds `cap`.
BruteForceReport brute_force(const Panel& panel, int horizon, std::span<const VariableKey> variables,
                             const OptionGrid& grid, const RunOptions& options = {},
                             std::size_t cap = 7);

void write_forward_report(std::ostream& out, const ForwardSelectionReport& report);

}  // namespace refclass
