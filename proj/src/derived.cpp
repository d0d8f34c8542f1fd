#include "refclass/derived.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "refclass/csv.hpp"
#include "refclass/errors.hpp"

namespace refclass {

CpiTable parse_cpi_csv(std::string_view text) {
    const auto records = csv::lines(text);
    if (records.empty()) throw ParseError("CPI file: missing header row");
    const auto header = csv::split(records.front());
    auto year_it = std::find(header.begin(), header.end(), "year");
    auto index_it = std::find(header.begin(), header.end(), "index");
    if (year_it == header.end() || index_it == header.end()) {
        throw ParseError("CPI file: header must contain 'year' and 'index'");
    }
    const auto yc = static_cast<std::size_t>(year_it - header.begin());
    const auto ic = static_cast<std::size_t>(index_it - header.begin());

    std::map<int, std::pair<double, int>> acc;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto cells = csv::split(records[r]);
        const auto where = "CPI row " + std::to_string(r);
        if (cells.size() != header.size()) throw ParseError(where + ": wrong field count");
        const int year = static_cast<int>(csv::parse_int(cells[yc], where + " column year"));
        auto v = csv::parse_real(cells[ic], where + " column index");
        if (!v) throw ParseError(where + ": empty index");
        if (*v <= 0.0) throw DomainError(where + ": CPI index must be positive");
        auto& [sum, count] = acc[year];
        sum += *v;
        ++count;
    }
    CpiTable out;
    for (const auto& [year, sc] : acc) out[year] = sc.first / sc.second;
    return out;
}

CpiTable read_cpi_csv(const std::filesystem::path& path) {
    return parse_cpi_csv(csv::read_file(path.string()));
}

Panel deflate(const Panel& panel, const CpiTable& cpi, double base_index) {
    if (!(base_index > 0.0)) throw DomainError("CPI base index must be positive");
    std::vector<int> missing;
    for (int y = panel.start_year(); y <= panel.end_year(); ++y) {
        auto [b, e] = panel.year_rows(y);
        if (b != e && !cpi.contains(y)) missing.push_back(y);
    }
    if (!missing.empty()) {
        std::string msg = "CPI table lacks panel years:";
        for (int y : missing) msg += " " + std::to_string(y);
        throw DomainError(msg);
    }

    Panel out = panel;
    for (const auto& key : panel.columns()) {
        if (!key.is_dollar()) continue;
        Panel::Column col = *panel.column(key);
        for (std::size_t r = 0; r < col.size(); ++r) {
            if (col[r]) *col[r] *= base_index / cpi.at(panel.year(r));
        }
        out = out.with_column(key, std::move(col));
    }
    auto prov = panel.provenance();
    prov.deflated = true;
    return out.with_provenance(std::move(prov));
}

namespace {

void check_tau(int tau) {
    if (tau < 1 || tau > kMaxLag) {
        throw DomainError("tau must be in [1, 10], got " + std::to_string(tau));
    }
}

template <typename F>
Panel derive_lagged(const Panel& panel, const VariableKey& source, const VariableKey& target,
                    int tau, F combine) {
    Panel::Column out(panel.size());
    const Panel::Column* src = panel.column(source);
    if (src) {
        for (std::size_t r = 0; r < panel.size(); ++r) {
            const auto& now = (*src)[r];
            if (!now) continue;
            auto past_row = panel.find(panel.firm(r), panel.year(r) - tau);
            if (!past_row) continue;
            const auto& past = (*src)[*past_row];
            if (!past) continue;
            out[r] = combine(*now, *past);
        }
    }
    return panel.with_column(target, std::move(out));
}

}  // namespace

Panel derive_growth(const Panel& panel, int tau) {
    check_tau(tau);
    return derive_lagged(panel, VariableKey{Base::sales}, sales_growth(tau), tau,
                         [](double now, double past) -> std::optional<double> {
                             if (past <= 0.0) return std::nullopt;
                             return (now / past - 1.0) * 100.0;
                         });
}

Panel derive_opmar_delta(const Panel& panel, int tau) {
    check_tau(tau);
    return derive_lagged(panel, VariableKey{Base::opmar}, opmar_delta(tau), tau,
                         [](double now, double past) -> std::optional<double> {
                             return now - past;
                         });
}

Panel ensure_derived(const Panel& panel, std::span<const VariableKey> keys) {
    Panel out = panel;
    for (const auto& k : keys) {
        if (out.has_column(k)) continue;
        if (k.base == Base::salesGR) {
            out = derive_growth(out, k.lag);
        } else if (k.base == Base::opmarDelta) {
            out = derive_opmar_delta(out, k.lag);
        }
    }
    return out;
}

double cagr(double start_value, double end_value, int years) {
    if (!(start_value > 0.0)) throw DomainError("cagr: start value must be positive");
    if (end_value < 0.0) throw DomainError("cagr: end value must be non-negative");
    if (years < 1) throw DomainError("cagr: horizon must be at least one year");
    if (end_value == 0.0) return -100.0;
    return (std::pow(end_value / start_value, 1.0 / years) - 1.0) * 100.0;
}

namespace {

std::vector<double> trimmed(std::span<const double> sample, double alpha) {
    if (sample.empty()) throw DomainError("trimmed statistic of an empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("trim level must lie in (0, 1)");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    // Guard against alpha * n landing a rounding error below an integer.
    const auto cut = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n) + 1e-9));
    if (2 * cut >= n) throw DomainError("trimming leaves no observations");
    return {sorted.begin() + static_cast<std::ptrdiff_t>(cut),
            sorted.end() - static_cast<std::ptrdiff_t>(cut)};
}

}  // namespace

double trimmed_mean(std::span<const double> sample, double alpha) {
    const auto kept = trimmed(sample, alpha);
    return std::accumulate(kept.begin(), kept.end(), 0.0) / static_cast<double>(kept.size());
}

double trimmed_std(std::span<const double> sample, double alpha) {
    const auto kept = trimmed(sample, alpha);
    if (kept.size() < 2) return 0.0;
    const double mean = std::accumulate(kept.begin(), kept.end(), 0.0) / static_cast<double>(kept.size());
    double ss = 0.0;
    for (double x : kept) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(kept.size() - 1));
}

}  // namespace refclass
