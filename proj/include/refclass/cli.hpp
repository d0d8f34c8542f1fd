#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

#include "refclass/panel.hpp"
#include "refclass/selection.hpp"

namespace refclass {

/// A complete forecasting configuration: horizon, window, variables, selector.
struct Preset {
    int horizon = 1;
    int window = 30;
    std::vector<VariableKey> variables;
    SelectorConfig selector;
};

/// Best backtest configuration shapes per horizon: best-h1, best-h3, best-h5,
/// best-h10. Throws ParseError for other names.
Preset preset(std::string_view name);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int data = 2;
}  // namespace exit_code

/// Runs the `refclass` command line. Machine output goes to `out`,
/// diagnostics and usage text to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace refclass
