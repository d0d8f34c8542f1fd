#include "refclass/selection.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numeric>

#include "refclass/errors.hpp"
#include "refclass/stats.hpp"

namespace refclass {

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::market_climate: return "market_climate";
        case Algorithm::group_major: return "group_major";
        case Algorithm::group_industry: return "group_industry";
        case Algorithm::mc_deciles: return "mc_deciles";
        case Algorithm::rank_deviation: return "rank_deviation";
        case Algorithm::pca_rank_deviation: return "pca_rank_deviation";
    }
    return "";
}

std::string to_string(Combination c) {
    switch (c) {
        case Combination::lard: return "lard";
        case Combination::union_: return "union";
        case Combination::intersection: return "intersection";
    }
    return "";
}

Algorithm parse_algorithm(std::string_view text) {
    for (auto a : {Algorithm::market_climate, Algorithm::group_major, Algorithm::group_industry,
                   Algorithm::mc_deciles, Algorithm::rank_deviation, Algorithm::pca_rank_deviation}) {
        if (to_string(a) == text) return a;
    }
    throw ParseError("unknown algorithm '" + std::string(text) + "'");
}

Combination parse_combination(std::string_view text) {
    for (auto c : {Combination::lard, Combination::union_, Combination::intersection}) {
        if (to_string(c) == text) return c;
    }
    throw ParseError("unknown combination '" + std::string(text) + "'");
}

double SelectorConfig::per_variable_size(std::size_t kappa) const {
    if (!correction || kappa == 0) return size;
    switch (combination) {
        case Combination::union_: return size / static_cast<double>(kappa);
        case Combination::intersection: return std::min(size * static_cast<double>(kappa), 0.25);
        case Combination::lard: return size;
    }
    return size;
}

std::string SelectorConfig::describe() const {
    std::string out = to_string(algorithm);
    if (algorithm == Algorithm::pca_rank_deviation) {
        out += "|" + to_string(transform) + "|" + pc_rule.name();
        if (transform == PreTransform::trim && trim_standardization == TrimStandardization::full_sample) {
            out += "|fullstd";
        }
    }
    if (algorithm == Algorithm::rank_deviation || algorithm == Algorithm::pca_rank_deviation) {
        out += "|" + to_string(combination);
        if (combination != Combination::lard) out += correction ? "|cor" : "|nocor";
        out += "|" + format_number(size);
    }
    return out;
}

// ------------------------------------------------------------ RankTable

RankTable::RankTable(std::vector<Column> columns) : columns_(std::move(columns)) {
    rows_ = columns_.empty() ? 0 : columns_.front().size();
    for (const auto& col : columns_) {
        if (col.size() != rows_) throw DomainError("rank table columns differ in length");
    }
    observed_.resize(columns_.size());
    sorted_.resize(columns_.size());
    ranks_.resize(columns_.size());
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        const auto& col = columns_[c];
        auto& obs = observed_[c];
        for (std::size_t r = 0; r < rows_; ++r) {
            if (!col[r]) continue;
            if (std::isnan(*col[r])) throw DomainError("NaN reference value");
            obs.push_back(static_cast<std::uint32_t>(r));
        }
        std::sort(obs.begin(), obs.end(), [&](std::uint32_t a, std::uint32_t b) {
            return *col[a] < *col[b] || (*col[a] == *col[b] && a < b);
        });
        auto& sorted = sorted_[c];
        sorted.reserve(obs.size());
        for (auto r : obs) sorted.push_back(*col[r]);
        auto& rk = ranks_[c];
        rk.assign(rows_, 0.0);
        std::size_t i = 0;
        while (i < obs.size()) {
            std::size_t j = i + 1;
            while (j < obs.size() && sorted[j] == sorted[i]) ++j;
            const double mid = 0.5 * static_cast<double>(i + 1 + j);
            for (std::size_t t = i; t < j; ++t) rk[obs[t]] = mid;
            i = j;
        }
    }
}

// --------------------------------------------------------- CandidateSet

CandidateSet::CandidateSet(std::vector<FirmYear> members, std::vector<double> outcomes,
                           std::vector<VariableKey> variables, std::vector<RankTable::Column> columns)
    : members_(std::move(members)),
      outcomes_(std::move(outcomes)),
      variables_(std::move(variables)),
      table_(std::move(columns)) {
    if (outcomes_.size() != members_.size()) throw DomainError("outcomes misaligned with members");
    if (variables_.size() != table_.cols()) throw DomainError("variable list misaligned with columns");
    if (table_.cols() > 0 && table_.rows() != members_.size()) {
        throw DomainError("columns misaligned with members");
    }
}

std::optional<std::size_t> CandidateSet::variable_index(const VariableKey& k) const {
    auto it = std::find(variables_.begin(), variables_.end(), k);
    if (it == variables_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - variables_.begin());
}

std::optional<double> realized_growth(const Panel& panel, std::string_view firm, int base_year,
                                      int horizon) {
    auto end_row = panel.find(firm, base_year + horizon);
    if (!end_row) return std::nullopt;
    if (horizon >= 1 && horizon <= kMaxLag) {
        if (const auto* col = panel.column(sales_growth(horizon))) return (*col)[*end_row];
    }
    auto start_row = panel.find(firm, base_year);
    if (!start_row) return std::nullopt;
    const VariableKey sales{Base::sales};
    auto s0 = panel.value(*start_row, sales);
    auto s1 = panel.value(*end_row, sales);
    if (!s0 || !s1 || !(*s0 > 0.0)) return std::nullopt;
    return (*s1 / *s0 - 1.0) * 100.0;
}

std::vector<std::optional<double>> forward_outcomes(const Panel& panel, int horizon) {
    std::vector<std::optional<double>> out(panel.size());
    for (std::size_t r = 0; r < panel.size(); ++r) {
        out[r] = realized_growth(panel, panel.firm(r), panel.year(r), horizon);
    }
    return out;
}

CandidateSet build_candidates(const Panel& panel, const ForecastCase& fc, Availability availability,
                              const std::vector<std::optional<double>>* outcomes) {
    if (fc.horizon < 1 || fc.window < 1) throw DomainError("horizon and window must be positive");
    const int first = fc.first_candidate_year();
    const int last = fc.last_candidate_year();
    if (first < panel.start_year() || last > panel.end_year()) {
        throw DomainError("candidate window [" + std::to_string(first) + ", " + std::to_string(last) +
                          "] leaves the panel range");
    }
    if (outcomes && outcomes->size() != panel.size()) {
        throw DomainError("precomputed outcomes do not match the panel");
    }

    const std::size_t kappa = fc.variables.size();
    std::vector<const Panel::Column*> cols(kappa, nullptr);
    for (std::size_t v = 0; v < kappa; ++v) {
        if (fc.variables[v].base == Base::sic) continue;
        cols[v] = panel.column(fc.variables[v]);
    }
    auto value_of = [&](std::size_t v, std::size_t row) -> std::optional<double> {
        if (fc.variables[v].base == Base::sic) return panel.value(row, fc.variables[v]);
        return cols[v] ? (*cols[v])[row] : std::nullopt;
    };

    std::vector<FirmYear> members;
    std::vector<double> ys;
    std::vector<RankTable::Column> columns(kappa);
    std::vector<std::optional<double>> values(kappa);
    auto [begin, _] = panel.year_rows(first);
    auto [__, end] = panel.year_rows(last);
    for (std::size_t row = begin; row < end; ++row) {
        const auto y = outcomes ? (*outcomes)[row]
                                : realized_growth(panel, panel.firm(row), panel.year(row), fc.horizon);
        if (!y) continue;
        std::size_t present = 0;
        for (std::size_t v = 0; v < kappa; ++v) {
            values[v] = value_of(v, row);
            if (values[v]) ++present;
        }
        const bool eligible = availability == Availability::all_variables
                                  ? present == kappa
                                  : (kappa == 0 || present > 0);
        if (!eligible) continue;
        members.push_back(panel.key(row));
        ys.push_back(*y);
        for (std::size_t v = 0; v < kappa; ++v) columns[v].push_back(values[v]);
    }
    if (members.size() < kMinClassSize) {
        throw InsufficientCandidatesError("only " + std::to_string(members.size()) +
                                          " candidates for (" + fc.target.firm_id + ", " +
                                          std::to_string(fc.target.year) + ")");
    }
    return CandidateSet(std::move(members), std::move(ys), fc.variables, std::move(columns));
}

// ------------------------------------------------------------ selectors

std::size_t class_size(double c, std::size_t n) {
    if (!(c > 0.0 && c < 1.0)) throw DomainError("class size must lie in (0, 1)");
    // c * n can land one ulp above an integer; do not round that up.
    const double k = std::ceil(c * static_cast<double>(n) - 1e-9);
    return std::min(n, std::max(kMinClassSize, static_cast<std::size_t>(k)));
}

ReferenceClass make_class(const CandidateSet& cands, std::vector<std::size_t> indices,
                          std::string provenance) {
    if (indices.size() < kMinClassSize) {
        throw UndersizedClassError("reference class has " + std::to_string(indices.size()) +
                                   " members, fewer than 20");
    }
    std::sort(indices.begin(), indices.end());
    ReferenceClass rc;
    rc.members.reserve(indices.size());
    rc.outcomes.reserve(indices.size());
    for (auto i : indices) {
        rc.members.push_back(cands.members()[i]);
        rc.outcomes.push_back(cands.outcomes()[i]);
    }
    rc.indices = std::move(indices);
    rc.provenance = std::move(provenance);
    return rc;
}

ReferenceClass select_market_climate(const CandidateSet& cands) {
    std::vector<std::size_t> all(cands.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return make_class(cands, std::move(all), to_string(Algorithm::market_climate));
}

std::vector<std::size_t> group_members(const CandidateSet& cands, int target_sic, int digits) {
    if (digits != 2 && digits != 3) throw DomainError("group digits must be 2 or 3");
    auto col = cands.variable_index(VariableKey{Base::sic});
    if (!col) throw DomainError("candidate set carries no SIC codes");
    const int divisor = digits == 2 ? 100 : 10;
    const int prefix = target_sic / divisor;
    std::vector<std::size_t> idx;
    const auto& sic = cands.table().column(*col);
    for (std::size_t i = 0; i < sic.size(); ++i) {
        if (sic[i] && static_cast<int>(*sic[i]) / divisor == prefix) idx.push_back(i);
    }
    return idx;
}

ReferenceClass select_group(const CandidateSet& cands, int target_sic, int digits) {
    return make_class(cands, group_members(cands, target_sic, digits),
                      to_string(digits == 2 ? Algorithm::group_major : Algorithm::group_industry));
}

std::vector<std::size_t> mc_members(const CandidateSet& cands, double target_sales) {
    auto col = cands.variable_index(VariableKey{Base::sales});
    if (!col) throw DomainError("candidate set carries no sales values");
    const auto& table = cands.table();
    if (cands.observed_count(*col) != cands.size()) {
        throw DomainError("MC deciles need sales for every candidate");
    }
    const Ecdf ecdf(std::vector<double>(table.sorted_values(*col).begin(),
                                        table.sorted_values(*col).end()));
    const auto& sales = table.column(*col);
    std::vector<std::size_t> idx;
    const double top = ecdf.quantile(0.99);
    if (target_sales > top) {
        for (std::size_t i = 0; i < sales.size(); ++i)
            if (*sales[i] > top) idx.push_back(i);
    } else {
        double lower = -std::numeric_limits<double>::infinity();
        double upper = std::numeric_limits<double>::infinity();
        for (int d = 1; d <= 10; ++d) {
            const double q = d == 10 ? std::numeric_limits<double>::infinity() : ecdf.quantile(d / 10.0);
            if (target_sales <= q) {
                upper = q;
                break;
            }
            lower = q;
        }
        for (std::size_t i = 0; i < sales.size(); ++i)
            if (*sales[i] > lower && *sales[i] <= upper) idx.push_back(i);
    }
    return idx;
}

ReferenceClass select_mc(const CandidateSet& cands, double target_sales) {
    return make_class(cands, mc_members(cands, target_sales), to_string(Algorithm::mc_deciles));
}

namespace {

using Scored = std::pair<double, std::uint32_t>;

std::vector<std::size_t> take_nearest(std::vector<Scored>& scored, std::size_t k) {
    k = std::min(k, scored.size());
    std::nth_element(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end());
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(scored[i].second);
    std::sort(out.begin(), out.end());
    return out;
}

// Rank of every observed member among observed members ∪ {x}, minus the
// target's own rank, in absolute value.
inline double rank_gap(double member_rank, double value, double x, double target_rank) {
    const double shift = value > x ? 1.0 : (value == x ? 0.5 : 0.0);
    return std::abs(member_rank + shift - target_rank);
}

}  // namespace

std::vector<std::size_t> single_variable_members(const RankTable& table, std::size_t column,
                                                 double target, double size) {
    if (std::isnan(target)) throw DomainError("NaN target value");
    const auto observed = table.observed(column);
    if (observed.size() < kMinClassSize) {
        throw UndersizedClassError("only " + std::to_string(observed.size()) +
                                   " candidates observe the reference variable");
    }
    const double r0 = insertion_rank_sorted(table.sorted_values(column), target);
    const auto rk = table.ranks(column);
    const auto& col = table.column(column);
    std::vector<Scored> scored;
    scored.reserve(observed.size());
    for (auto m : observed) scored.emplace_back(rank_gap(rk[m], *col[m], target, r0), m);
    return take_nearest(scored, class_size(size, observed.size()));
}

std::vector<std::size_t> rank_deviation_members(const RankTable& table,
                                                std::span<const double> target,
                                                const SelectorConfig& config) {
    const std::size_t kappa = table.cols();
    if (kappa == 0) throw DomainError("rank deviation needs at least one reference variable");
    if (target.size() != kappa) throw DomainError("target vector length differs from variable count");

    switch (config.combination) {
        case Combination::lard: {
            std::vector<double> r0(kappa);
            for (std::size_t c = 0; c < kappa; ++c) {
                r0[c] = insertion_rank_sorted(table.sorted_values(c), target[c]);
            }
            std::vector<Scored> scored;
            scored.reserve(table.rows());
            for (std::size_t m = 0; m < table.rows(); ++m) {
                double d = 0.0;
                bool complete = true;
                for (std::size_t c = 0; c < kappa && complete; ++c) {
                    const auto& v = table.column(c)[m];
                    if (!v) {
                        complete = false;
                    } else {
                        d += rank_gap(table.ranks(c)[m], *v, target[c], r0[c]);
                    }
                }
                if (complete) scored.emplace_back(d, static_cast<std::uint32_t>(m));
            }
            if (scored.size() < kMinClassSize) {
                throw UndersizedClassError("fewer than 20 candidates observe every reference variable");
            }
            return take_nearest(scored, class_size(config.size, scored.size()));
        }
        case Combination::union_:
        case Combination::intersection: {
            const double c_prime = config.per_variable_size(kappa);
            std::vector<std::size_t> acc = single_variable_members(table, 0, target[0], c_prime);
            for (std::size_t c = 1; c < kappa; ++c) {
                const auto next = single_variable_members(table, c, target[c], c_prime);
                std::vector<std::size_t> merged;
                if (config.combination == Combination::union_) {
                    std::set_union(acc.begin(), acc.end(), next.begin(), next.end(),
                                   std::back_inserter(merged));
                } else {
                    std::set_intersection(acc.begin(), acc.end(), next.begin(), next.end(),
                                          std::back_inserter(merged));
                }
                acc = std::move(merged);
            }
            if (acc.size() < kMinClassSize) {
                throw UndersizedClassError(to_string(config.combination) + " of per-variable classes has " +
                                           std::to_string(acc.size()) + " members");
            }
            return acc;
        }
    }
    return {};
}

ReferenceClass select_rank_deviation(const CandidateSet& cands, std::span<const double> target,
                                     const SelectorConfig& config) {
    if (cands.size() < kMinClassSize) throw InsufficientCandidatesError("fewer than 20 candidates");
    return make_class(cands, rank_deviation_members(cands.table(), target, config), config.describe());
}

// ------------------------------------------------------------ PCA route

PcaSelector::PcaSelector(const CandidateSet& cands, const SelectorConfig& config)
    : cands_(&cands), config_(config) {
    const auto& table = cands.table();
    const std::size_t n = cands.size();
    const std::size_t kappa = table.cols();
    if (n < kMinClassSize) throw InsufficientCandidatesError("fewer than 20 candidates");
    Matrix x(n, kappa);
    for (std::size_t c = 0; c < kappa; ++c) {
        if (cands.observed_count(c) != n) {
            throw DomainError("PCA rank deviation needs every reference variable observed");
        }
        const auto& col = table.column(c);
        for (std::size_t r = 0; r < n; ++r) x(r, c) = *col[r];
    }

    const std::vector<double> origin(kappa, 0.0);
    auto transformed = pre_transform(x, origin, config.transform);
    model_ = fit(transformed.data);
    model_.transform = config.transform;
    model_.components = select_count(model_.eigenvalues, config.pc_rule);

    const bool trim = config.transform == PreTransform::trim;
    if (trim && config.trim_standardization == TrimStandardization::full_sample) {
        for (std::size_t j = 0; j < model_.columns.size(); ++j) {
            const std::size_t c = model_.columns[j];
            double sum = 0.0;
            for (std::size_t r = 0; r < n; ++r) sum += x(r, c);
            const double mean = sum / static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t r = 0; r < n; ++r) ss += (x(r, c) - mean) * (x(r, c) - mean);
            model_.means[j] = mean;
            model_.stds[j] = std::sqrt(ss / static_cast<double>(n - 1));
        }
    }
    if (config.transform == PreTransform::ranks) {
        sorted_columns_.resize(kappa);
        for (std::size_t c = 0; c < kappa; ++c) {
            auto s = table.sorted_values(c);
            sorted_columns_[c].assign(s.begin(), s.end());
        }
    }

    const auto projection = project(model_, trim ? x : transformed.data, origin);
    std::vector<RankTable::Column> pcs(model_.components, RankTable::Column(n));
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t l = 0; l < model_.components; ++l) pcs[l][r] = projection.rows(r, l);
    projected_ = RankTable(std::move(pcs));
}

std::vector<double> PcaSelector::project_target(std::span<const double> target) const {
    const std::size_t kappa = model_.input_columns();
    if (target.size() != kappa) throw DomainError("target vector length differs from variable count");
    std::vector<double> t(target.begin(), target.end());
    switch (config_.transform) {
        case PreTransform::signed_fifth_root:
            for (double& v : t) v = signed_fifth_root(v);
            break;
        case PreTransform::ranks:
            for (std::size_t c = 0; c < kappa; ++c) t[c] = insertion_rank_sorted(sorted_columns_[c], t[c]);
            break;
        case PreTransform::identity:
        case PreTransform::trim:
            break;
    }
    return project(model_, Matrix(0, kappa), t).target;
}

std::vector<std::size_t> PcaSelector::members(std::span<const double> target) const {
    return rank_deviation_members(projected_, project_target(target), config_);
}

ReferenceClass PcaSelector::select(std::span<const double> target) const {
    return make_class(*cands_, members(target), config_.describe());
}

ReferenceClass select_pca_rank_deviation(const CandidateSet& cands, std::span<const double> target,
                                         const SelectorConfig& config) {
    return PcaSelector(cands, config).select(target);
}

// ------------------------------------------------------------ dispatch

Availability availability_for(const SelectorConfig& config) {
    if (config.algorithm == Algorithm::market_climate) return Availability::per_variable;
    if (config.algorithm == Algorithm::rank_deviation && config.combination == Combination::union_) {
        return Availability::per_variable;
    }
    return Availability::all_variables;
}

std::vector<VariableKey> selector_variables(const SelectorConfig& config,
                                            std::span<const VariableKey> variables) {
    switch (config.algorithm) {
        case Algorithm::market_climate: return {};
        case Algorithm::group_major:
        case Algorithm::group_industry: return {VariableKey{Base::sic}};
        case Algorithm::mc_deciles: return {VariableKey{Base::sales}};
        case Algorithm::rank_deviation:
        case Algorithm::pca_rank_deviation: break;
    }
    if (variables.empty()) throw DomainError(to_string(config.algorithm) + " needs reference variables");
    return {variables.begin(), variables.end()};
}

std::optional<std::vector<double>> values_at(const Panel& panel, std::size_t row,
                                             std::span<const VariableKey> variables) {
    std::vector<double> out;
    out.reserve(variables.size());
    for (const auto& k : variables) {
        auto v = panel.value(row, k);
        if (!v) return std::nullopt;
        out.push_back(*v);
    }
    return out;
}

PreparedSelector::PreparedSelector(const CandidateSet& cands, const SelectorConfig& config)
    : cands_(&cands), config_(config) {
    if (config.algorithm == Algorithm::pca_rank_deviation) pca_.emplace(cands, config);
}

std::vector<std::size_t> PreparedSelector::members(std::span<const double> target) const {
    std::vector<std::size_t> idx;
    switch (config_.algorithm) {
        case Algorithm::market_climate:
            idx.resize(cands_->size());
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            break;
        case Algorithm::group_major:
        case Algorithm::group_industry:
            if (target.size() != 1) throw DomainError("group approach needs the target SIC");
            idx = group_members(*cands_, static_cast<int>(target[0]),
                                config_.algorithm == Algorithm::group_major ? 2 : 3);
            break;
        case Algorithm::mc_deciles:
            if (target.size() != 1) throw DomainError("MC deciles need the target sales");
            idx = mc_members(*cands_, target[0]);
            break;
        case Algorithm::rank_deviation:
            if (cands_->size() < kMinClassSize) throw InsufficientCandidatesError("fewer than 20 candidates");
            idx = rank_deviation_members(cands_->table(), target, config_);
            break;
        case Algorithm::pca_rank_deviation: idx = pca_->members(target); break;
    }
    if (idx.size() < kMinClassSize) {
        throw UndersizedClassError("reference class has " + std::to_string(idx.size()) +
                                   " members, fewer than 20");
    }
    return idx;
}

ReferenceClass PreparedSelector::select(std::span<const double> target) const {
    return make_class(*cands_, members(target), config_.describe());
}

}  // namespace refclass
