#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string_view>

#include "refclass/panel.hpp"

namespace refclass {

/// Annual CPI index by year.
using CpiTable = std::map<int, double>;

/// Reads `year,index` rows. Years listed more than once (monthly data) are
/// averaged into one annual index.
CpiTable read_cpi_csv(const std::filesystem::path& path);
CpiTable parse_cpi_csv(std::string_view text);

/// Scales sales, at and seq to base-index dollars: x * base_index / cpi[year].
/// Throws DomainError naming every panel year the table lacks.
Panel deflate(const Panel& panel, const CpiTable& cpi, double base_index);

/// salesGR_tau = (sales(t) / sales(t - tau) - 1) * 100 in percent. Missing when
/// either endpoint is missing or the base is zero.
Panel derive_growth(const Panel& panel, int tau);

/// opmarDelta_tau = opmar(t) - opmar(t - tau) in percentage points.
Panel derive_opmar_delta(const Panel& panel, int tau);

/// Derives every lagged variable in `keys` the panel does not carry yet.
Panel ensure_derived(const Panel& panel, std::span<const VariableKey> keys);

/// Compound annual growth rate in percent.
double cagr(double start_value, double end_value, int years);

/// Mean of the sorted sample after dropping floor(alpha * n) values from each tail.
double trimmed_mean(std::span<const double> sample, double alpha);
/// Standard deviation (denominator n - 1) of the same trimmed sample.
double trimmed_std(std::span<const double> sample, double alpha);

}  // namespace refclass
