#include "refclass/synthgen.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "json.hpp"

#include "refclass/csv.hpp"
#include "refclass/errors.hpp"

namespace refclass {

std::vector<VariableProcess> GeneratorSpec::default_processes() {
    return {
        {VariableKey{Base::opmar}, 8.0, 8.0, 0.8, 0.0, false, 0.0},
        {VariableKey{Base::at}, 6.0, 1.5, 0.95, 0.0, true, 0.0},
        {VariableKey{Base::seq}, 5.0, 1.5, 0.95, 0.0, true, 0.0},
        {VariableKey{Base::beta}, 1.0, 0.4, 0.5, 0.0, false, 0.0},
        {VariableKey{Base::pe}, 15.0, 10.0, 0.5, 0.0, false, 0.0},
        {VariableKey{Base::pb}, 0.7, 0.6, 0.7, 0.0, true, 0.0},
    };
}

// ------------------------------------------------------------------ spec

namespace {

using nlohmann::json;

void validate(const GeneratorSpec& spec) {
    if (spec.firms == 0) throw DomainError("generator needs at least one firm");
    if (spec.years < 1) throw DomainError("generator needs at least one year");
    if (!(spec.exit_hazard >= 0.0 && spec.exit_hazard < 1.0)) {
        throw DomainError("exit hazard must lie in [0, 1)");
    }
    if (spec.entry_spread < 0 || spec.entry_spread >= spec.years) {
        throw DomainError("entry spread must lie in [0, years)");
    }
    if (!(spec.mechanism.scale >= 0.0)) throw DomainError("mechanism scale must be non-negative");
    for (int h : spec.horizons) {
        if (h < 1 || h > kMaxLag) throw DomainError("sidecar horizons must lie in 1..10");
    }
    bool has_driver = !spec.mechanism.driver.has_value();
    for (const auto& p : spec.variables) {
        switch (p.key.base) {
            case Base::opmar:
            case Base::at:
            case Base::seq:
            case Base::beta:
            case Base::pe:
            case Base::pb: break;
            default: throw DomainError("variable '" + p.key.name() + "' cannot be generated by a process");
        }
        if (!(p.persistence > -1.0 && p.persistence < 1.0)) {
            throw DomainError("persistence of '" + p.key.name() + "' must lie in (-1, 1)");
        }
        if (!std::isfinite(p.trend)) throw DomainError("trend of '" + p.key.name() + "' must be finite");
        if (!(p.sd >= 0.0)) throw DomainError("sd of '" + p.key.name() + "' must be non-negative");
        if (!(p.missing_rate >= 0.0 && p.missing_rate < 1.0)) {
            throw DomainError("missing rate of '" + p.key.name() + "' must lie in [0, 1)");
        }
        if (spec.mechanism.driver && p.key == *spec.mechanism.driver) has_driver = true;
    }
    if (!has_driver) throw DomainError("mechanism driver has no process");
}

}  // namespace

GeneratorSpec parse_generator_spec(std::string_view json_text) {
    GeneratorSpec spec;
    try {
        const json j = json::parse(json_text);
        if (!j.is_object()) throw ParseError("generator spec must be a JSON object");
        spec.firms = j.value("firms", spec.firms);
        spec.start_year = j.value("start_year", spec.start_year);
        spec.years = j.value("years", spec.years);
        spec.seed = j.value("seed", spec.seed);
        spec.exit_hazard = j.value("exit_hazard", spec.exit_hazard);
        spec.entry_spread = j.value("entry_spread", spec.entry_spread);
        spec.initial_log_sales = j.value("initial_log_sales", spec.initial_log_sales);
        spec.initial_log_sales_sd = j.value("initial_log_sales_sd", spec.initial_log_sales_sd);
        if (j.contains("horizons")) spec.horizons = j["horizons"].get<std::vector<int>>();
        if (j.contains("mechanism")) {
            const auto& m = j["mechanism"];
            if (m.contains("driver")) {
                spec.mechanism.driver = m["driver"].is_null()
                                            ? std::nullopt
                                            : std::optional(VariableKey::parse(m["driver"].get<std::string>()));
            }
            spec.mechanism.location = m.value("location", spec.mechanism.location);
            spec.mechanism.location_slope = m.value("location_slope", spec.mechanism.location_slope);
            spec.mechanism.scale = m.value("scale", spec.mechanism.scale);
            spec.mechanism.scale_slope = m.value("scale_slope", spec.mechanism.scale_slope);
        }
        if (j.contains("variables")) {
            spec.variables.clear();
            for (const auto& v : j["variables"]) {
                VariableProcess p;
                p.key = VariableKey::parse(v.at("name").get<std::string>());
                p.mean = v.value("mean", p.mean);
                p.sd = v.value("sd", p.sd);
                p.persistence = v.value("persistence", p.persistence);
                p.trend = v.value("trend", p.trend);
                p.lognormal = v.value("lognormal", p.lognormal);
                p.missing_rate = v.value("missing_rate", p.missing_rate);
                spec.variables.push_back(p);
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("generator spec: ") + e.what());
    }
    validate(spec);
    return spec;
}

GeneratorSpec read_generator_spec(const std::filesystem::path& path) {
    return parse_generator_spec(csv::read_file(path.string()));
}

// ---------------------------------------------------------------- oracle

void OracleTable::set(const std::string& firm, int year, int horizon, OracleEntry e) {
    entries_[{firm, year, horizon}] = e;
}

const OracleEntry& OracleTable::at(const std::string& firm, int year, int horizon) const {
    auto it = entries_.find({firm, year, horizon});
    if (it == entries_.end()) {
        throw DomainError("no oracle entry for (" + firm + ", " + std::to_string(year) + ", h=" +
                          std::to_string(horizon) + ")");
    }
    return it->second;
}

bool OracleTable::contains(const std::string& firm, int year, int horizon) const {
    return entries_.contains({firm, year, horizon});
}

void write_oracle_csv(const OracleTable& table, std::ostream& out) {
    out << "firm_id,year,horizon,loc,scale\n";
    for (const auto& [k, e] : table.entries()) {
        out << csv::quote(std::get<0>(k)) << ',' << std::get<1>(k) << ',' << std::get<2>(k) << ','
            << format_number(e.loc) << ',' << format_number(e.scale) << '\n';
    }
}

OracleTable parse_oracle_csv(std::string_view text) {
    const auto rows = csv::lines(text);
    if (rows.empty() || csv::split(rows[0]) !=
                            std::vector<std::string>{"firm_id", "year", "horizon", "loc", "scale"}) {
        throw ParseError("oracle sidecar must start with 'firm_id,year,horizon,loc,scale'");
    }
    OracleTable table;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = csv::split(rows[i]);
        const std::string where = "sidecar row " + std::to_string(i + 1);
        if (f.size() != 5) throw ParseError(where + ": expected 5 fields");
        const auto loc = csv::parse_real(f[3], where);
        const auto scale = csv::parse_real(f[4], where);
        if (!loc || !scale || *scale < 0.0) throw ParseError(where + ": loc and scale >= 0 required");
        table.set(f[0], static_cast<int>(csv::parse_int(f[1], where)),
                  static_cast<int>(csv::parse_int(f[2], where)), {*loc, *scale});
    }
    return table;
}

OracleTable read_oracle_csv(const std::filesystem::path& path) {
    return parse_oracle_csv(csv::read_file(path.string()));
}

double oracle_cdf(const OracleEntry& e, double y) {
    if (y <= -100.0) return 0.0;
    const double l = std::log1p(y / 100.0);
    if (e.scale == 0.0) return l >= e.loc ? 1.0 : 0.0;
    return 0.5 * std::erfc(-(l - e.loc) / (e.scale * std::numbers::sqrt2));
}

double oracle_pit(const OracleTable& table, const std::string& firm, int year, int horizon,
                  double realized) {
    return oracle_cdf(table.at(firm, year, horizon), realized);
}

// ------------------------------------------------------------- generator

namespace {

/// Bit-exact draws from mt19937_64; standard library distributions are not
/// specified precisely enough to be reproducible across implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (cached_) {
            cached_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        cached_ = true;
        return r * std::cos(theta);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool cached_ = false;
};

constexpr int kSicMajors[] = {20, 28, 35, 36, 38, 48, 49, 50, 73};

std::string firm_name(std::size_t i, std::size_t total) {
    std::string digits = std::to_string(i + 1);
    const std::size_t width = std::to_string(total).size();
    return "F" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

}  // namespace

SyntheticPanel generate(const GeneratorSpec& spec) {
    validate(spec);
    Rng rng(spec.seed);
    const auto& mech = spec.mechanism;
    const std::size_t kappa = spec.variables.size();
    std::optional<std::size_t> driver;
    if (mech.driver) {
        for (std::size_t v = 0; v < kappa; ++v) {
            if (spec.variables[v].key == *mech.driver) driver = v;
        }
    }

    PanelBuilder builder(YearBounds{spec.start_year, spec.end_year()}, PanelProvenance{"synthetic"});
    builder.declare(VariableKey{Base::sales});
    for (const auto& p : spec.variables) builder.declare(p.key);
    SyntheticPanel out;

    for (std::size_t f = 0; f < spec.firms; ++f) {
        const std::string id = firm_name(f, spec.firms);
        const int entry = spec.start_year + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.entry_spread) + 1));
        const int major = kSicMajors[rng.below(std::size(kSicMajors))];
        const int sic = major * 100 + static_cast<int>(rng.below(100));
        double log_sales = spec.initial_log_sales + spec.initial_log_sales_sd * rng.normal();

        std::vector<double> z(kappa);
        for (auto& zi : z) zi = rng.normal();

        // Yearly growth law while the firm lives: (mu, sigma) of each step.
        std::vector<std::pair<double, double>> steps;
        int year = entry;
        for (;; ++year) {
            Observation obs;
            obs.key = {id, year};
            obs.sic = sic;
            obs.values[VariableKey{Base::sales}] = std::exp(log_sales);
            const double elapsed = static_cast<double>(year - spec.start_year);
            auto state = [&](std::size_t v) { return z[v] + spec.variables[v].trend * elapsed; };
            for (std::size_t v = 0; v < kappa; ++v) {
                const auto& p = spec.variables[v];
                const double missing_draw = rng.uniform();
                if (missing_draw < p.missing_rate) continue;
                const double x = p.mean + p.sd * state(v);
                obs.values[p.key] = p.lognormal ? std::exp(x) : x;
            }
            builder.add(std::move(obs));

            const double zd = driver ? state(*driver) : 0.0;
            const double mu = mech.location + mech.location_slope * zd;
            const double sigma = mech.scale * std::exp(mech.scale_slope * zd);
            steps.emplace_back(mu, sigma);

            if (year == spec.end_year()) break;
            if (rng.uniform() < spec.exit_hazard) break;
            log_sales += mu + sigma * rng.normal();
            for (std::size_t v = 0; v < kappa; ++v) {
                const double phi = spec.variables[v].persistence;
                z[v] = phi * z[v] + std::sqrt(1.0 - phi * phi) * rng.normal();
            }
        }
        const int last = year;

        for (int h : spec.horizons) {
            for (int t = entry; t + h <= last; ++t) {
                double loc = 0.0;
                double var = 0.0;
                for (int k = 0; k < h; ++k) {
                    const auto [mu, sigma] = steps[static_cast<std::size_t>(t - entry + k)];
                    loc += mu;
                    var += sigma * sigma;
                }
                out.oracle.set(id, t, h, {loc, std::sqrt(var)});
            }
        }
    }
    out.panel = std::move(builder).build();
    return out;
}

}  // namespace refclass
