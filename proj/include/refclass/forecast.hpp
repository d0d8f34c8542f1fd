#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refclass/panel.hpp"
#include "refclass/selection.hpp"
#include "refclass/stats.hpp"

namespace refclass {

/// Sorted realized h-year sales growth (percent) of a reference class.
class DistributionalForecast {
public:
    DistributionalForecast(std::vector<double> outcomes, int horizon, FirmYear target = {});

    const std::vector<double>& outcomes() const { return ecdf_.sorted(); }
    std::size_t size() const { return ecdf_.size(); }
    int horizon() const { return horizon_; }
    const FirmYear& target() const { return target_; }
    const Ecdf& ecdf() const { return ecdf_; }
    double quantile(double alpha) const { return ecdf_.quantile(alpha); }

private:
    Ecdf ecdf_;
    int horizon_;
    FirmYear target_;
};

/// Throws UndersizedClassError below 20 outcomes and DomainError for growth
/// below -100 or a non-positive horizon.
DistributionalForecast make_forecast(const ReferenceClass& ref_class, int horizon, FirmYear target = {});

/// Fraction of reference outcomes <= realized.
double pit(const DistributionalForecast& forecast, double realized);

struct WarningThresholds {
    double low = 0.05;
    double high = 0.95;
};

struct EstimateAssessment {
    std::vector<double> estimates;
    std::vector<double> pits;
    /// Reference mass of [min estimate, max estimate].
    double coverage = 0.0;
    bool warning = false;
};

/// PIT of each estimate, their coverage and a warning flag for PITs in the
/// outer tails. Throws DomainError for an empty estimate list.
EstimateAssessment assess_estimates(const DistributionalForecast& forecast,
                                    std::span<const double> estimates, WarningThresholds thresholds = {});

struct BaseRateBin {
    std::string label;
    std::optional<double> lower;  // exclusive
    std::optional<double> upper;  // inclusive
    double percent = 0.0;
};

/// CAGR distribution of a forecast in the 16 fixed 5-point bins plus summary rows.
struct BaseRateTable {
    int horizon = 1;
    std::vector<BaseRateBin> bins;
    double trimmed_mean = 0.0;
    double median = 0.0;
    double trimmed_std = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
};

inline constexpr double kBaseRateTrim = 0.025;

/// Empty bins with edges <= -25, (-25, -20], ..., (40, 45], > 45.
std::vector<BaseRateBin> base_rate_bins();

BaseRateTable base_rates(const DistributionalForecast& forecast);

/// Cumulative h-year growth converted to compound annual growth, in percent.
double annualized_growth(double cumulative_pct, int horizon);

/// Everything produced for one forecast case.
struct CaseForecast {
    std::size_t candidates = 0;
    ReferenceClass ref_class;
    DistributionalForecast forecast;
};

/// Builds candidates, selects the class and turns it into a forecast for the
/// panel firm-year `fc.target`. The target must carry every selector variable.
CaseForecast forecast_case(const Panel& panel, const ForecastCase& fc, const SelectorConfig& config);

struct TrackRecord {
    int year = 0;
    bool skipped = false;
    std::string reason;
    std::size_t class_size = 0;
    double q10 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q90 = 0.0;
    std::optional<double> realized;
    std::optional<double> pit;  // of the realization under the year's forecast
};

/// One record per base year in [first_year, last_year]; years whose class
/// cannot be built are marked skipped with the reason. Throws DomainError if
/// the firm is not in the panel.
std::vector<TrackRecord> historic_track(const Panel& panel, const std::string& firm, int first_year,
                                        int last_year, int horizon, int window,
                                        std::span<const VariableKey> variables,
                                        const SelectorConfig& config);

/// Quantile levels of the forecast report.
const std::vector<double>& report_quantile_levels();

}  // namespace refclass
