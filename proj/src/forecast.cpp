#include "refclass/forecast.hpp"

#include <algorithm>
#include <cmath>

#include "refclass/derived.hpp"
#include "refclass/errors.hpp"

namespace refclass {

DistributionalForecast::DistributionalForecast(std::vector<double> outcomes, int horizon, FirmYear target)
    : ecdf_(std::move(outcomes)), horizon_(horizon), target_(std::move(target)) {
    if (horizon_ < 1) throw DomainError("forecast horizon must be positive");
    if (ecdf_.size() < kMinClassSize) {
        throw UndersizedClassError("a forecast needs at least 20 reference outcomes");
    }
    if (ecdf_.sorted().front() < -100.0) throw DomainError("sales growth below -100%");
}

DistributionalForecast make_forecast(const ReferenceClass& ref_class, int horizon, FirmYear target) {
    return DistributionalForecast(ref_class.outcomes, horizon, std::move(target));
}

double pit(const DistributionalForecast& forecast, double realized) {
    return forecast.ecdf()(realized);
}

EstimateAssessment assess_estimates(const DistributionalForecast& forecast,
                                    std::span<const double> estimates, WarningThresholds thresholds) {
    if (estimates.empty()) throw DomainError("no estimates to assess");
    EstimateAssessment out;
    out.estimates.assign(estimates.begin(), estimates.end());
    for (double e : estimates) {
        const double p = pit(forecast, e);
        out.pits.push_back(p);
        if (p < thresholds.low || p > thresholds.high) out.warning = true;
    }
    const auto [lo, hi] = std::minmax_element(estimates.begin(), estimates.end());
    out.coverage = forecast.ecdf()(*hi) - forecast.ecdf().left_limit(*lo);
    return out;
}

std::vector<BaseRateBin> base_rate_bins() {
    std::vector<BaseRateBin> bins;
    bins.push_back({"<=-25", std::nullopt, -25.0, 0.0});
    for (int lo = -25; lo < 45; lo += 5) {
        bins.push_back({"]" + std::to_string(lo) + "," + std::to_string(lo + 5) + "]",
                        static_cast<double>(lo), static_cast<double>(lo + 5), 0.0});
    }
    bins.push_back({">45", 45.0, std::nullopt, 0.0});
    return bins;
}

double annualized_growth(double cumulative_pct, int horizon) {
    if (horizon == 1) return cumulative_pct;
    return cagr(100.0, 100.0 + cumulative_pct, horizon);
}

BaseRateTable base_rates(const DistributionalForecast& forecast) {
    BaseRateTable table;
    table.horizon = forecast.horizon();
    table.bins = base_rate_bins();

    std::vector<double> annual;
    annual.reserve(forecast.size());
    for (double g : forecast.outcomes()) annual.push_back(annualized_growth(g, forecast.horizon()));
    std::sort(annual.begin(), annual.end());

    std::vector<std::size_t> counts(table.bins.size(), 0);
    for (double x : annual) {
        auto it = std::find_if(table.bins.begin(), table.bins.end(), [&](const BaseRateBin& b) {
            return (!b.lower || x > *b.lower) && (!b.upper || x <= *b.upper);
        });
        ++counts[static_cast<std::size_t>(it - table.bins.begin())];
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        table.bins[i].percent = 100.0 * static_cast<double>(counts[i]) / static_cast<double>(annual.size());
    }
    const Ecdf ecdf(annual);
    table.trimmed_mean = trimmed_mean(annual, kBaseRateTrim);
    table.trimmed_std = trimmed_std(annual, kBaseRateTrim);
    table.median = ecdf.quantile(0.5);
    table.q025 = ecdf.quantile(0.025);
    table.q975 = ecdf.quantile(0.975);
    return table;
}

CaseForecast forecast_case(const Panel& panel, const ForecastCase& fc, const SelectorConfig& config) {
    const auto vars = selector_variables(config, fc.variables);
    auto row = panel.find(fc.target.firm_id, fc.target.year);
    if (!row) {
        throw DomainError("firm-year (" + fc.target.firm_id + ", " + std::to_string(fc.target.year) +
                          ") not in panel");
    }
    auto target = values_at(panel, *row, vars);
    if (!target) throw DomainError("target firm-year lacks a reference variable");

    ForecastCase effective = fc;
    effective.variables = vars;
    const auto cands = build_candidates(panel, effective, availability_for(config));
    const PreparedSelector selector(cands, config);
    auto rc = selector.select(*target);
    auto fcst = make_forecast(rc, fc.horizon, fc.target);
    return CaseForecast{cands.size(), std::move(rc), std::move(fcst)};
}

std::vector<TrackRecord> historic_track(const Panel& panel, const std::string& firm, int first_year,
                                        int last_year, int horizon, int window,
                                        std::span<const VariableKey> variables,
                                        const SelectorConfig& config) {
    if (!panel.contains_firm(firm)) throw DomainError("firm '" + firm + "' not in panel");
    if (first_year > last_year) throw DomainError("empty year range");
    std::vector<TrackRecord> out;
    for (int year = first_year; year <= last_year; ++year) {
        TrackRecord rec;
        rec.year = year;
        rec.realized = realized_growth(panel, firm, year, horizon);
        try {
            ForecastCase fc{{firm, year}, horizon, {variables.begin(), variables.end()}, window};
            const auto cf = forecast_case(panel, fc, config);
            const auto& f = cf.forecast;
            rec.class_size = f.size();
            rec.q10 = f.quantile(0.10);
            rec.q25 = f.quantile(0.25);
            rec.q50 = f.quantile(0.50);
            rec.q75 = f.quantile(0.75);
            rec.q90 = f.quantile(0.90);
            if (rec.realized) rec.pit = pit(f, *rec.realized);
        } catch (const Error& e) {
            rec.skipped = true;
            rec.reason = e.what();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

const std::vector<double>& report_quantile_levels() {
    static const std::vector<double> levels{0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99};
    return levels;
}

}  // namespace refclass
