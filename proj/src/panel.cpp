#include "refclass/panel.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <ostream>
#include <set>

#include "refclass/csv.hpp"
#include "refclass/errors.hpp"

namespace refclass {

namespace {

struct BaseName {
    Base base;
    std::string_view name;
};

constexpr std::array<BaseName, 10> kBaseNames{{
    {Base::sales, "sales"},
    {Base::opmar, "opmar"},
    {Base::at, "at"},
    {Base::seq, "seq"},
    {Base::sic, "sic"},
    {Base::beta, "beta"},
    {Base::pe, "pe"},
    {Base::pb, "pb"},
    {Base::salesGR, "salesGR"},
    {Base::opmarDelta, "opmarDelta"},
}};

bool is_lagged(Base b) { return b == Base::salesGR || b == Base::opmarDelta; }

// Standard export order of the raw columns.
const std::array<VariableKey, 7> kRawOrder{
    VariableKey{Base::sales}, VariableKey{Base::opmar}, VariableKey{Base::at},
    VariableKey{Base::seq},   VariableKey{Base::beta},  VariableKey{Base::pe},
    VariableKey{Base::pb},
};

}  // namespace

VariableKey::VariableKey(Base b, int l) : base(b), lag(l) {
    if (is_lagged(b)) {
        if (l < 1 || l > kMaxLag) {
            throw DomainError("lag of " + std::string(kBaseNames[static_cast<int>(b)].name) +
                              " must be in [1, 10], got " + std::to_string(l));
        }
    } else if (l != 0) {
        throw DomainError("contemporaneous variable " +
                          std::string(kBaseNames[static_cast<int>(b)].name) + " cannot carry lag " +
                          std::to_string(l));
    }
}

std::string VariableKey::name() const {
    std::string out(kBaseNames[static_cast<int>(base)].name);
    if (is_lagged(base)) out += "_" + std::to_string(lag);
    return out;
}

VariableKey VariableKey::parse(std::string_view text) {
    std::string_view stem = text;
    int lag = 0;
    if (auto us = text.rfind('_'); us != std::string_view::npos) {
        stem = text.substr(0, us);
        auto digits = text.substr(us + 1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), lag);
        if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size()) {
            throw ParseError("unknown variable '" + std::string(text) + "'");
        }
    }
    for (const auto& bn : kBaseNames) {
        if (bn.name == stem) {
            if (is_lagged(bn.base) && stem == text) {
                throw ParseError("variable '" + std::string(text) + "' needs a lag suffix _1.._10");
            }
            try {
                return VariableKey(bn.base, lag);
            } catch (const DomainError& e) {
                throw ParseError(e.what());
            }
        }
    }
    throw ParseError("unknown variable '" + std::string(text) + "'");
}

VariableKey sales_growth(int lag) { return {Base::salesGR, lag}; }
VariableKey opmar_delta(int lag) { return {Base::opmarDelta, lag}; }

std::vector<VariableKey> contemporaneous_variables() {
    return {kRawOrder.begin(), kRawOrder.end()};
}

std::strong_ordering FirmYear::operator<=>(const FirmYear& other) const {
    if (auto c = year <=> other.year; c != 0) return c;
    return firm_id.compare(other.firm_id) <=> 0;
}

std::optional<double> Observation::get(const VariableKey& k) const {
    if (k.base == Base::sic) {
        if (sic) return static_cast<double>(*sic);
        return std::nullopt;
    }
    auto it = values.find(k);
    if (it == values.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------- Panel

std::optional<double> Panel::value(std::size_t row, const VariableKey& k) const {
    if (k.base == Base::sic) {
        if (sic_[row]) return static_cast<double>(*sic_[row]);
        return std::nullopt;
    }
    auto it = columns_.find(k);
    if (it == columns_.end()) return std::nullopt;
    return it->second[row];
}

bool Panel::has_column(const VariableKey& k) const {
    return k.base == Base::sic || columns_.contains(k);
}

const Panel::Column* Panel::column(const VariableKey& k) const {
    auto it = columns_.find(k);
    return it == columns_.end() ? nullptr : &it->second;
}

std::vector<VariableKey> Panel::columns() const {
    std::vector<VariableKey> out;
    for (const auto& [k, _] : columns_) out.push_back(k);
    return out;
}

std::optional<std::size_t> Panel::find(std::string_view firm, int year) const {
    auto it = firm_index_.find(std::string(firm));
    if (it == firm_index_.end()) return std::nullopt;
    const auto& v = it->second;
    auto pos = std::lower_bound(v.begin(), v.end(), year,
                                [](const auto& e, int y) { return e.first < y; });
    if (pos == v.end() || pos->first != year) return std::nullopt;
    return pos->second;
}

bool Panel::contains_firm(std::string_view firm) const {
    return firm_index_.contains(std::string(firm));
}

std::pair<std::size_t, std::size_t> Panel::year_rows(int year) const {
    if (year < bounds_.start_year || year > bounds_.end_year || year_offsets_.empty()) return {0, 0};
    const auto i = static_cast<std::size_t>(year - bounds_.start_year);
    return {year_offsets_[i], year_offsets_[i + 1]};
}

Observation Panel::observation(std::size_t row) const {
    Observation obs{key(row), sic_[row], {}};
    for (const auto& [k, col] : columns_) {
        if (col[row]) obs.values.emplace(k, *col[row]);
    }
    return obs;
}

Panel Panel::with_column(const VariableKey& k, Column values) const {
    if (values.size() != size()) throw IntegrityError("column length does not match panel size");
    if (k.base == Base::sic) throw IntegrityError("sic is not a real-valued column");
    Panel out = *this;
    out.columns_[k] = std::move(values);
    return out;
}

Panel Panel::with_provenance(PanelProvenance p) const {
    Panel out = *this;
    out.provenance_ = std::move(p);
    return out;
}

// --------------------------------------------------------- PanelBuilder

PanelBuilder::PanelBuilder(YearBounds bounds, PanelProvenance provenance)
    : bounds_(bounds), provenance_(std::move(provenance)) {
    if (bounds_.start_year > bounds_.end_year) {
        throw DomainError("panel start year exceeds end year");
    }
}

void PanelBuilder::add(Observation obs) {
    const auto& key = obs.key;
    if (key.year < bounds_.start_year || key.year > bounds_.end_year) {
        throw IntegrityError("year " + std::to_string(key.year) + " of firm " + key.firm_id +
                             " outside panel range [" + std::to_string(bounds_.start_year) + ", " +
                             std::to_string(bounds_.end_year) + "]");
    }
    if (auto s = obs.get(VariableKey{Base::sales}); s && *s < 0.0) {
        throw IntegrityError("negative sales for (" + key.firm_id + ", " +
                             std::to_string(key.year) + ")");
    }
    for (const auto& [k, v] : obs.values) {
        if (k.base == Base::salesGR && v < -100.0) {
            throw IntegrityError(k.name() + " below -100 for (" + key.firm_id + ", " +
                                 std::to_string(key.year) + ")");
        }
    }
    auto [it, inserted] = seen_.emplace(std::pair{key.firm_id, key.year}, rows_.size());
    if (!inserted) {
        throw IntegrityError("duplicate firm-year (" + key.firm_id + ", " +
                             std::to_string(key.year) + ")");
    }
    rows_.push_back(std::move(obs));
}

void PanelBuilder::declare(const VariableKey& k) {
    if (k.base != Base::sic) declared_.push_back(k);
}

Panel PanelBuilder::build() && {
    std::sort(rows_.begin(), rows_.end(),
              [](const Observation& a, const Observation& b) { return a.key < b.key; });

    Panel p;
    p.bounds_ = bounds_;
    p.provenance_ = std::move(provenance_);
    const std::size_t n = rows_.size();
    p.firm_.reserve(n);
    p.year_.reserve(n);
    p.sic_.reserve(n);
    std::set<VariableKey> keys(declared_.begin(), declared_.end());
    for (const auto& obs : rows_) {
        for (const auto& [k, _] : obs.values) keys.insert(k);
    }
    for (const auto& k : keys) p.columns_.emplace(k, Panel::Column(n));
    for (std::size_t r = 0; r < n; ++r) {
        auto& obs = rows_[r];
        for (auto& [k, v] : obs.values) p.columns_[k][r] = v;
        p.year_.push_back(obs.key.year);
        p.sic_.push_back(obs.sic);
        p.firm_index_[obs.key.firm_id].emplace_back(obs.key.year, r);
        p.firm_.push_back(std::move(obs.key.firm_id));
    }
    for (auto& [_, v] : p.firm_index_) std::sort(v.begin(), v.end());

    const int years = bounds_.end_year - bounds_.start_year + 1;
    p.year_offsets_.assign(static_cast<std::size_t>(years) + 1, 0);
    std::size_t r = 0;
    for (int y = 0; y < years; ++y) {
        p.year_offsets_[static_cast<std::size_t>(y)] = r;
        while (r < n && p.year_[r] == bounds_.start_year + y) ++r;
    }
    p.year_offsets_[static_cast<std::size_t>(years)] = n;
    rows_.clear();
    seen_.clear();
    return p;
}

// ---------------------------------------------------------------- CSV

CsvSchema default_schema(std::span<const std::string> header) {
    CsvSchema schema;
    for (const auto& col : header) {
        if (col == "firm_id" || col == "year") continue;
        try {
            schema.emplace(col, VariableKey::parse(col));
        } catch (const ParseError&) {
            // Unrecognized columns are not part of the panel.
        }
    }
    return schema;
}

Panel parse_panel_csv(std::string_view text, const CsvSchema* schema, YearBounds bounds,
                      std::string source) {
    const auto records = csv::lines(text);
    if (records.empty()) throw ParseError(source + ": missing header row");
    const auto header = csv::split(records.front());

    auto locate = [&](std::string_view name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw ParseError(source + ": required column '" + std::string(name) + "' missing");
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t firm_col = locate("firm_id");
    const std::size_t year_col = locate("year");

    const CsvSchema effective = schema ? *schema : default_schema(header);
    struct Bound {
        std::size_t index;
        VariableKey key;
    };
    std::vector<Bound> bound;
    for (const auto& [name, key] : effective) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            if (schema) throw ParseError(source + ": schema column '" + name + "' missing");
            continue;
        }
        bound.push_back({static_cast<std::size_t>(it - header.begin()), key});
    }

    PanelBuilder builder(bounds, PanelProvenance{source, false});
    for (const auto& b : bound) builder.declare(b.key);
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto cells = csv::split(records[r]);
        const std::string where_row = source + " row " + std::to_string(r);
        if (cells.size() != header.size()) {
            throw ParseError(where_row + ": expected " + std::to_string(header.size()) +
                             " fields, found " + std::to_string(cells.size()));
        }
        Observation obs;
        obs.key.firm_id = cells[firm_col];
        if (obs.key.firm_id.empty()) throw ParseError(where_row + ": empty firm_id");
        obs.key.year = static_cast<int>(csv::parse_int(cells[year_col], where_row + " column year"));
        for (const auto& b : bound) {
            const auto where = where_row + " column " + header[b.index];
            auto v = csv::parse_real(cells[b.index], where);
            if (!v) continue;
            if (b.key.base == Base::sic) {
                obs.sic = static_cast<int>(csv::parse_int(cells[b.index], where));
            } else {
                obs.values[b.key] = *v;
            }
        }
        try {
            builder.add(std::move(obs));
        } catch (const IntegrityError& e) {
            throw IntegrityError(where_row + ": " + e.what());
        }
    }
    return std::move(builder).build();
}

Panel ingest_csv(const std::filesystem::path& path, YearBounds bounds) {
    return parse_panel_csv(csv::read_file(path.string()), nullptr, bounds, path.string());
}

Panel ingest_csv(const std::filesystem::path& path, const CsvSchema& schema, YearBounds bounds) {
    return parse_panel_csv(csv::read_file(path.string()), &schema, bounds, path.string());
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

void export_csv(const Panel& panel, std::ostream& out) {
    std::vector<VariableKey> order(kRawOrder.begin(), kRawOrder.end());
    for (Base b : {Base::salesGR, Base::opmarDelta}) {
        for (int lag = 1; lag <= kMaxLag; ++lag) {
            if (panel.has_column({b, lag})) order.emplace_back(b, lag);
        }
    }
    out << "firm_id,year,sic";
    for (const auto& k : order) out << ',' << k.name();
    out << '\n';
    for (std::size_t r = 0; r < panel.size(); ++r) {
        out << csv::quote(panel.firm(r)) << ',' << panel.year(r) << ',';
        if (auto s = panel.sic(r)) out << *s;
        for (const auto& k : order) {
            out << ',';
            if (auto v = panel.value(r, k)) out << format_number(*v);
        }
        out << '\n';
    }
}

void export_csv(const Panel& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    export_csv(panel, out);
}

}  // namespace refclass
