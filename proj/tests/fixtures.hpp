#pragma once

#include "refclass/synthgen.hpp"

namespace fixture {

/// 50 firms over 1950..2019 with staggered entry, exits and gaps in the
/// reference variables, so every eligibility condition bites somewhere.
inline refclass::GeneratorSpec ragged_spec(std::uint64_t seed = 7) {
    refclass::GeneratorSpec g;
    g.firms = 50;
    g.start_year = 1950;
    g.years = 70;
    g.seed = seed;
    g.exit_hazard = 0.01;
    g.entry_spread = 20;
    for (auto& p : g.variables) p.missing_rate = 0.05;
    return g;
}

/// Signal only in opmar: location moves with the driver, every other
/// variable is noise. Matches the oracle-calibration mechanism.
inline refclass::GeneratorSpec signal_spec(std::size_t firms, int years, std::uint64_t seed) {
    refclass::GeneratorSpec g;
    g.firms = firms;
    g.years = years;
    g.seed = seed;
    g.variables[0].trend = 0.06;
    g.mechanism.location_slope = 0.05;
    g.mechanism.scale = 0.15;
    return g;
}

}  // namespace fixture
