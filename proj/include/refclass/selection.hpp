#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "refclass/panel.hpp"
#include "refclass/pca.hpp"

namespace refclass {

/// Definition-level minimum size of a reference class.
inline constexpr std::size_t kMinClassSize = 20;

enum class Algorithm {
    market_climate,
    group_major,
    group_industry,
    mc_deciles,
    rank_deviation,
    pca_rank_deviation,
};

enum class Combination { lard, union_, intersection };
enum class Availability { all_variables, per_variable };

std::string to_string(Algorithm a);
std::string to_string(Combination c);
Algorithm parse_algorithm(std::string_view text);
Combination parse_combination(std::string_view text);

struct ForecastCase {
    FirmYear target;
    int horizon = 1;
    std::vector<VariableKey> variables;
    int window = 30;

    /// Inclusive candidate base-year range [t - h - w + 1, t - h].
    int first_candidate_year() const { return target.year - horizon - window + 1; }
    int last_candidate_year() const { return target.year - horizon; }
};

struct SelectorConfig {
    Algorithm algorithm = Algorithm::rank_deviation;
    double size = 0.05;
    Combination combination = Combination::lard;
    bool correction = false;
    PreTransform transform = PreTransform::ranks;
    PcCountRule pc_rule = PcCountRule::fixed(2);
    TrimStandardization trim_standardization = TrimStandardization::trimmed_subset;

    /// Per-variable class size for union / intersection building blocks.
    double per_variable_size(std::size_t kappa) const;
    /// Compact, stable text form used in result rows and tie-breaking.
    std::string describe() const;

    bool operator==(const SelectorConfig&) const = default;
};

/// Columns of reference-variable values over a fixed member list with a
/// per-column ascending index, so insertion ranks cost O(log N).
class RankTable {
public:
    using Column = std::vector<std::optional<double>>;

    RankTable() = default;
    /// Every column must have the same length; values must not be NaN.
    explicit RankTable(std::vector<Column> columns);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return columns_.size(); }
    const Column& column(std::size_t c) const { return columns_[c]; }

    /// Members observed in column c, ascending by value then member index.
    std::span<const std::uint32_t> observed(std::size_t c) const { return observed_[c]; }
    /// Values of observed(c), ascending.
    std::span<const double> sorted_values(std::size_t c) const { return sorted_[c]; }
    /// Midrank of each member among the observed values of column c (0 if missing).
    std::span<const double> ranks(std::size_t c) const { return ranks_[c]; }

private:
    std::size_t rows_ = 0;
    std::vector<Column> columns_;
    std::vector<std::vector<std::uint32_t>> observed_;
    std::vector<std::vector<double>> sorted_;
    std::vector<std::vector<double>> ranks_;
};

/// Firm-years eligible for one forecast case, ordered by (year, firm_id).
class CandidateSet {
public:
    CandidateSet() = default;
    CandidateSet(std::vector<FirmYear> members, std::vector<double> outcomes,
                 std::vector<VariableKey> variables, std::vector<RankTable::Column> columns);

    std::size_t size() const { return members_.size(); }
    const std::vector<FirmYear>& members() const { return members_; }
    const std::vector<double>& outcomes() const { return outcomes_; }
    const std::vector<VariableKey>& variables() const { return variables_; }
    const RankTable& table() const { return table_; }

    /// Column position of `k`, or nullopt.
    std::optional<std::size_t> variable_index(const VariableKey& k) const;
    /// Number of members observed for column c.
    std::size_t observed_count(std::size_t c) const { return table_.observed(c).size(); }

private:
    std::vector<FirmYear> members_;
    std::vector<double> outcomes_;
    std::vector<VariableKey> variables_;
    RankTable table_;
};

/// Realized h-year sales growth at firm-year (firm, base_year + h), taken from
/// salesGR_h when the panel carries it and computed from sales otherwise.
std::optional<double> realized_growth(const Panel& panel, std::string_view firm, int base_year,
                                      int horizon);

/// Realized h-year growth for every panel row used as a base year.
std::vector<std::optional<double>> forward_outcomes(const Panel& panel, int horizon);

/// Builds the candidate set of `fc`. `outcomes`, when given, must come from
/// forward_outcomes(panel, fc.horizon). Throws InsufficientCandidatesError
/// below 20 members and DomainError if the window leaves the panel range.
CandidateSet build_candidates(const Panel& panel, const ForecastCase& fc, Availability availability,
                              const std::vector<std::optional<double>>* outcomes = nullptr);

struct ReferenceClass {
    std::vector<std::size_t> indices;  // ascending positions in the candidate set
    std::vector<FirmYear> members;
    std::vector<double> outcomes;
    std::string provenance;

    std::size_t size() const { return indices.size(); }
};

/// max(ceil(c * n), 20), capped at n.
std::size_t class_size(double c, std::size_t n);

ReferenceClass select_market_climate(const CandidateSet& cands);

/// Members sharing the first `digits` (2 or 3) SIC digits with the target.
std::vector<std::size_t> group_members(const CandidateSet& cands, int target_sic, int digits);
ReferenceClass select_group(const CandidateSet& cands, int target_sic, int digits);

/// Top percentile if the target exceeds the 99% sales quantile, else the
/// sales decile holding the target (boundary values belong to the lower decile).
std::vector<std::size_t> mc_members(const CandidateSet& cands, double target_sales);
ReferenceClass select_mc(const CandidateSet& cands, double target_sales);

/// Nearest `k` members of one column by absolute rank deviation, ranks taken
/// over the observed members plus the target. Ties at the cutoff go to the
/// lower member index.
std::vector<std::size_t> single_variable_members(const RankTable& table, std::size_t column,
                                                 double target, double size);

/// LARD / union / intersection selection over every column of `table`.
std::vector<std::size_t> rank_deviation_members(const RankTable& table,
                                                std::span<const double> target,
                                                const SelectorConfig& config);

ReferenceClass select_rank_deviation(const CandidateSet& cands, std::span<const double> target,
                                     const SelectorConfig& config);

/// Target-independent half of PCA rank deviation: transform, fit and
/// projection of the candidates. Reusable for every target sharing `cands`.
class PcaSelector {
public:
    PcaSelector(const CandidateSet& cands, const SelectorConfig& config);

    const PcaModel& model() const { return model_; }
    const RankTable& projected() const { return projected_; }
    std::size_t components() const { return model_.components; }

    /// Initial firm's coordinates on the retained components.
    std::vector<double> project_target(std::span<const double> target) const;
    /// Ascending candidate positions of the class, without the size floor.
    std::vector<std::size_t> members(std::span<const double> target) const;
    ReferenceClass select(std::span<const double> target) const;

private:
    const CandidateSet* cands_;
    SelectorConfig config_;
    PcaModel model_;
    RankTable projected_;
    std::vector<std::vector<double>> sorted_columns_;  // ranks transform only
};

ReferenceClass select_pca_rank_deviation(const CandidateSet& cands, std::span<const double> target,
                                         const SelectorConfig& config);

/// Candidate availability rule each algorithm needs: union and market climate
/// track availability per variable, everything else needs complete rows.
Availability availability_for(const SelectorConfig& config);

/// Reference variables an algorithm actually reads: none for market climate,
/// SIC for the group approach, sales for MC deciles, `variables` otherwise.
std::vector<VariableKey> selector_variables(const SelectorConfig& config,
                                            std::span<const VariableKey> variables);

/// Values of `variables` at panel row `row`; nullopt if any is missing.
std::optional<std::vector<double>> values_at(const Panel& panel, std::size_t row,
                                             std::span<const VariableKey> variables);

/// Any selector bound to one candidate set. PCA fits happen once here, so
/// every target sharing the candidate set reuses them.
class PreparedSelector {
public:
    PreparedSelector(const CandidateSet& cands, const SelectorConfig& config);

    /// `target` holds the initial firm's values of cands.variables().
    /// Ascending candidate positions; UndersizedClassError below 20.
    std::vector<std::size_t> members(std::span<const double> target) const;
    ReferenceClass select(std::span<const double> target) const;
    const SelectorConfig& config() const { return config_; }

private:
    const CandidateSet* cands_;
    SelectorConfig config_;
    std::optional<PcaSelector> pca_;
};

/// Materializes a class from candidate positions, enforcing the minimum size.
ReferenceClass make_class(const CandidateSet& cands, std::vector<std::size_t> indices,
                          std::string provenance);

}  // namespace refclass
