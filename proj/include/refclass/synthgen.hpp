#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "refclass/panel.hpp"

namespace refclass {

/// Latent AR(1) state z_t = phi z_{t-1} + sqrt(1 - phi^2) e_t with standard
/// normal margins, shifted by `trend` per year since the first panel year:
/// s_t = z_t + trend * (t - start_year). The observed value is mean + sd * s,
/// or exp(mean + sd * s) when `lognormal` (a right-skewed, positive variable).
struct VariableProcess {
    VariableKey key;
    double mean = 0.0;
    double sd = 1.0;
    double persistence = 0.8;
    double trend = 0.0;
    bool lognormal = false;
    double missing_rate = 0.0;
};

/// Yearly log sales growth l ~ N(mu, sigma^2) given the driver's latent state s:
/// mu = location + location_slope * s, sigma = scale * exp(scale_slope * s).
/// The law is the same in every year even when the driver trends.
/// Cumulative h-year growth is a shifted log-normal on (-100, inf).
struct Mechanism {
    std::optional<VariableKey> driver = VariableKey{Base::opmar};  // nullopt: ignore every variable
    double location = 0.05;
    double location_slope = 0.25;
    double scale = 0.10;
    double scale_slope = 0.0;
};

struct GeneratorSpec {
    std::size_t firms = 100;
    int start_year = 1950;
    int years = 40;
    std::uint64_t seed = 1;
    std::vector<VariableProcess> variables = default_processes();
    Mechanism mechanism;
    double exit_hazard = 0.0;  // yearly probability a firm leaves for good
    int entry_spread = 0;      // firms enter uniformly within the first entry_spread + 1 years
    double initial_log_sales = 5.0;
    double initial_log_sales_sd = 1.5;
    std::vector<int> horizons{1};  // sidecar horizons

    int end_year() const { return start_year + years - 1; }

    static std::vector<VariableProcess> default_processes();
};

/// Parses a JSON generator spec; absent fields keep their defaults.
GeneratorSpec parse_generator_spec(std::string_view json_text);
GeneratorSpec read_generator_spec(const std::filesystem::path& path);

/// True conditional law of the h-year outcome of one base firm-year:
/// ln(1 + Y / 100) ~ N(loc, scale^2).
struct OracleEntry {
    double loc = 0.0;
    double scale = 0.0;
};

using OracleKey = std::tuple<std::string, int, int>;  // firm_id, base year, horizon

class OracleTable {
public:
    void set(const std::string& firm, int year, int horizon, OracleEntry e);
    /// Throws DomainError when the table lacks the case.
    const OracleEntry& at(const std::string& firm, int year, int horizon) const;
    bool contains(const std::string& firm, int year, int horizon) const;
    std::size_t size() const { return entries_.size(); }
    const std::map<OracleKey, OracleEntry>& entries() const { return entries_; }

private:
    std::map<OracleKey, OracleEntry> entries_;
};

void write_oracle_csv(const OracleTable& table, std::ostream& out);
OracleTable parse_oracle_csv(std::string_view text);
OracleTable read_oracle_csv(const std::filesystem::path& path);

struct SyntheticPanel {
    Panel panel;
    OracleTable oracle;
};

/// Deterministic for a given spec (including the seed) on every platform.
SyntheticPanel generate(const GeneratorSpec& spec);

/// CDF of the shifted log-normal at growth y (percent). A zero scale gives
/// the step function 1{ln(1 + y/100) >= loc}.
double oracle_cdf(const OracleEntry& e, double y);

/// True conditional CDF of the case evaluated at the realization.
double oracle_pit(const OracleTable& table, const std::string& firm, int year, int horizon,
                  double realized);

}  // namespace refclass
