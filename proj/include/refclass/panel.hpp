#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace refclass {

/// Reference-variable families. `salesGR` and `opmarDelta` carry a lag.
enum class Base { sales, opmar, at, seq, sic, beta, pe, pb, salesGR, opmarDelta };

inline constexpr int kMaxLag = 10;

struct VariableKey {
    Base base = Base::sales;
    int lag = 0;

    VariableKey() = default;
    VariableKey(Base b, int l = 0);

    /// Canonical column name, e.g. "opmar", "salesGR_3".
    std::string name() const;
    /// Inverse of name(); throws ParseError for unknown names or illegal lags.
    static VariableKey parse(std::string_view text);

    bool is_dollar() const { return base == Base::sales || base == Base::at || base == Base::seq; }

    auto operator<=>(const VariableKey&) const = default;
};

VariableKey sales_growth(int lag);
VariableKey opmar_delta(int lag);

/// The seven contemporaneous variables other than SIC.
std::vector<VariableKey> contemporaneous_variables();

/// Firm-year identity. Ordered by (year, firm_id), the tie-break order used
/// throughout selection.
struct FirmYear {
    std::string firm_id;
    int year = 0;

    std::strong_ordering operator<=>(const FirmYear& other) const;
    bool operator==(const FirmYear&) const = default;
};

struct Observation {
    FirmYear key;
    std::optional<int> sic;
    std::map<VariableKey, double> values;  // absent key = missing

    std::optional<double> get(const VariableKey& k) const;
};

struct PanelProvenance {
    std::string source;
    bool deflated = false;
};

struct YearBounds {
    int start_year = 1950;
    int end_year = 2019;
};

class PanelBuilder;

/// Immutable firm-year panel stored column-wise. Rows are sorted by
/// (year, firm_id); missing values are empty optionals.
class Panel {
public:
    using Column = std::vector<std::optional<double>>;

    Panel() = default;

    std::size_t size() const { return firm_.size(); }
    int start_year() const { return bounds_.start_year; }
    int end_year() const { return bounds_.end_year; }
    const YearBounds& bounds() const { return bounds_; }
    const PanelProvenance& provenance() const { return provenance_; }

    const std::string& firm(std::size_t row) const { return firm_[row]; }
    int year(std::size_t row) const { return year_[row]; }
    FirmYear key(std::size_t row) const { return {firm_[row], year_[row]}; }
    std::optional<int> sic(std::size_t row) const { return sic_[row]; }

    /// Value of `k` at `row`; SIC is served as a real number.
    std::optional<double> value(std::size_t row, const VariableKey& k) const;
    bool has_column(const VariableKey& k) const;
    /// Column storage for `k`, or nullptr when the panel never carried it.
    const Column* column(const VariableKey& k) const;
    std::vector<VariableKey> columns() const;

    std::optional<std::size_t> find(std::string_view firm, int year) const;
    bool contains_firm(std::string_view firm) const;

    /// Half-open row range holding every observation of `year`.
    std::pair<std::size_t, std::size_t> year_rows(int year) const;

    Observation observation(std::size_t row) const;

    /// Copy of this panel with `k` set to `values` (one per row).
    Panel with_column(const VariableKey& k, Column values) const;
    Panel with_provenance(PanelProvenance p) const;

private:
    friend class PanelBuilder;

    YearBounds bounds_;
    PanelProvenance provenance_;
    std::vector<std::string> firm_;
    std::vector<int> year_;
    std::vector<std::optional<int>> sic_;
    std::map<VariableKey, Column> columns_;
    std::vector<std::size_t> year_offsets_;  // size = years + 1
    std::unordered_map<std::string, std::vector<std::pair<int, std::size_t>>> firm_index_;
};

/// Accumulates observations, validates them, and produces a Panel.
class PanelBuilder {
public:
    explicit PanelBuilder(YearBounds bounds = {}, PanelProvenance provenance = {});

    /// Throws IntegrityError on duplicate firm-years, out-of-range years,
    /// negative sales, or growth below -100.
    void add(Observation obs);
    /// Declares a column even if no observation carries a value for it.
    void declare(const VariableKey& k);
    std::size_t size() const { return rows_.size(); }

    Panel build() &&;

private:
    YearBounds bounds_;
    PanelProvenance provenance_;
    std::vector<Observation> rows_;
    std::map<std::pair<std::string, int>, std::size_t> seen_;
    std::vector<VariableKey> declared_;
};

/// Column name -> variable. `firm_id` and `year` are implicit.
using CsvSchema = std::map<std::string, VariableKey>;

/// Schema built from the standard column names present in `header`.
CsvSchema default_schema(std::span<const std::string> header);

Panel ingest_csv(const std::filesystem::path& path, YearBounds bounds = {});
Panel ingest_csv(const std::filesystem::path& path, const CsvSchema& schema, YearBounds bounds = {});
Panel parse_panel_csv(std::string_view text, const CsvSchema* schema, YearBounds bounds,
                      std::string source = "<memory>");

/// Writes the standard header plus every derived column the panel carries.
void export_csv(const Panel& panel, std::ostream& out);
void export_csv(const Panel& panel, const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

}  // namespace refclass
