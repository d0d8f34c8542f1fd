#include "refclass/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "refclass/errors.hpp"
#include "refclass/stats.hpp"

namespace refclass {

std::vector<double> Matrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
    if (cols_ != rhs.rows_) throw DomainError("matrix dimension mismatch");
    Matrix out(rows_, rhs.cols_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t k = 0; k < cols_; ++k) {
            const double a = (*this)(r, k);
            for (std::size_t c = 0; c < rhs.cols_; ++c) out(r, c) += a * rhs(k, c);
        }
    return out;
}

std::string to_string(PreTransform t) {
    switch (t) {
        case PreTransform::identity: return "none";
        case PreTransform::signed_fifth_root: return "root5";
        case PreTransform::ranks: return "ranks";
        case PreTransform::trim: return "trim";
    }
    return "none";
}

PreTransform parse_pre_transform(std::string_view text) {
    if (text == "none" || text == "identity") return PreTransform::identity;
    if (text == "root5" || text == "signed_fifth_root") return PreTransform::signed_fifth_root;
    if (text == "ranks") return PreTransform::ranks;
    if (text == "trim") return PreTransform::trim;
    throw ParseError("unknown PCA transform '" + std::string(text) + "'");
}

PcCountRule PcCountRule::fixed(std::size_t k) {
    if (k < 1) throw DomainError("fixed PC count must be positive");
    return {Kind::fixed, k, 0.0};
}

PcCountRule PcCountRule::explain(double share) {
    if (!(share > 0.0 && share < 1.0)) throw DomainError("explained share must lie in (0, 1)");
    return {Kind::explain, 0, share};
}

PcCountRule PcCountRule::above_mean() { return {Kind::above_mean, 0, 0.0}; }

std::string PcCountRule::name() const {
    switch (kind) {
        case Kind::fixed: return std::to_string(count);
        case Kind::explain: return std::to_string(static_cast<int>(std::lround(threshold * 100))) + "%";
        case Kind::above_mean: return "mean";
    }
    return "";
}

PcCountRule PcCountRule::parse(std::string_view text) {
    if (text == "mean") return above_mean();
    try {
        if (!text.empty() && text.back() == '%') {
            return explain(std::stod(std::string(text.substr(0, text.size() - 1))) / 100.0);
        }
        std::size_t used = 0;
        const auto s = std::string(text);
        const long k = std::stol(s, &used);
        if (used == s.size() && k > 0) return fixed(static_cast<std::size_t>(k));
    } catch (const std::logic_error&) {
    }
    throw ParseError("unknown PC rule '" + std::string(text) + "'");
}

std::vector<PcCountRule> all_pc_rules() {
    return {PcCountRule::fixed(2), PcCountRule::fixed(3), PcCountRule::explain(0.75),
            PcCountRule::explain(0.90), PcCountRule::above_mean()};
}

std::vector<PreTransform> all_pre_transforms() {
    return {PreTransform::identity, PreTransform::signed_fifth_root, PreTransform::ranks,
            PreTransform::trim};
}

// ------------------------------------------------------- pre_transform

double signed_fifth_root(double x) {
    if (x == 0.0) return 0.0;
    return std::copysign(std::pow(std::abs(x), 0.2), x);
}

TransformedData pre_transform(const Matrix& data, std::span<const double> target, PreTransform t) {
    const std::size_t n = data.rows();
    const std::size_t k = data.cols();
    if (target.size() != k) throw DomainError("initial firm vector length differs from column count");
    if (n < kMinRows) throw DegenerateError("PCA needs at least 20 candidate rows");
    if (k < 2) throw DomainError("PCA needs at least two reference variables");

    TransformedData out;
    out.target.assign(target.begin(), target.end());
    switch (t) {
        case PreTransform::identity:
            out.data = data;
            break;
        case PreTransform::signed_fifth_root:
            out.data = Matrix(n, k);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < k; ++c) out.data(r, c) = signed_fifth_root(data(r, c));
            for (double& x : out.target) x = signed_fifth_root(x);
            break;
        case PreTransform::ranks: {
            out.data = Matrix(n, k);
            for (std::size_t c = 0; c < k; ++c) {
                const auto col = data.column(c);
                const auto rk = ranks(col);
                for (std::size_t r = 0; r < n; ++r) out.data(r, c) = rk.values[r];
                out.target[c] = insertion_rank(col, target[c]);
            }
            break;
        }
        case PreTransform::trim: {
            const auto cut = static_cast<std::size_t>(std::floor(kTrimShare * static_cast<double>(n) + 1e-9));
            std::vector<bool> drop(n, false);
            std::vector<std::size_t> order(n);
            for (std::size_t c = 0; c < k; ++c) {
                std::iota(order.begin(), order.end(), std::size_t{0});
                std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                    const double va = data(a, c), vb = data(b, c);
                    return va < vb || (va == vb && a < b);
                });
                for (std::size_t i = 0; i < cut; ++i) {
                    drop[order[i]] = true;
                    drop[order[n - 1 - i]] = true;
                }
            }
            for (std::size_t r = 0; r < n; ++r)
                if (!drop[r]) out.retained_rows.push_back(r);
            if (out.retained_rows.size() < kMinRows) {
                throw DegenerateError("trimming leaves " + std::to_string(out.retained_rows.size()) +
                                      " candidates, fewer than 20");
            }
            out.data = Matrix(out.retained_rows.size(), k);
            for (std::size_t i = 0; i < out.retained_rows.size(); ++i) {
                const auto src = data.row(out.retained_rows[i]);
                std::copy(src.begin(), src.end(), out.data.row(i).begin());
            }
            return out;
        }
    }
    out.retained_rows.resize(n);
    std::iota(out.retained_rows.begin(), out.retained_rows.end(), std::size_t{0});
    return out;
}

// ------------------------------------------------------------- Jacobi

SymmetricEigen jacobi_eigen(Matrix a, double tolerance, int max_sweeps) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DomainError("eigen-decomposition needs a square matrix");
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
        return std::sqrt(s);
    };

    SymmetricEigen out;
    while (off_norm() > tolerance && out.sweeps < max_sweeps) {
        ++out.sweeps;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(theta, 1.0));
                const double c = 1.0 / std::hypot(t, 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (off_norm() > tolerance) throw DegenerateError("Jacobi iteration did not converge");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.values[j] = a(src, src);
        std::size_t lead = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(v(i, src)) > std::abs(v(lead, src))) lead = i;
        const double sign = v(lead, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = sign * v(i, src);
    }
    return out;
}

// ---------------------------------------------------------------- fit

PcaModel fit(const Matrix& data) {
    const std::size_t n = data.rows();
    const std::size_t k = data.cols();
    if (n < 2) throw DegenerateError("PCA needs at least two rows");

    PcaModel model;
    for (std::size_t c = 0; c < k; ++c) {
        double lo = data(0, c), hi = data(0, c), sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            lo = std::min(lo, data(r, c));
            hi = std::max(hi, data(r, c));
            sum += data(r, c);
        }
        if (lo == hi) {
            model.dropped.push_back(c);
            continue;
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) ss += (data(r, c) - mean) * (data(r, c) - mean);
        model.columns.push_back(c);
        model.means.push_back(mean);
        model.stds.push_back(std::sqrt(ss / static_cast<double>(n - 1)));
    }
    const std::size_t kk = model.columns.size();
    if (kk == 0) throw DegenerateError("every reference variable is constant over the candidates");

    Matrix z(n, kk);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < kk; ++j)
            z(r, j) = (data(r, model.columns[j]) - model.means[j]) / model.stds[j];

    Matrix corr(kk, kk);
    for (std::size_t r = 0; r < n; ++r) {
        const auto zr = z.row(r);
        for (std::size_t i = 0; i < kk; ++i)
            for (std::size_t j = i; j < kk; ++j) corr(i, j) += zr[i] * zr[j];
    }
    for (std::size_t i = 0; i < kk; ++i)
        for (std::size_t j = i; j < kk; ++j) {
            corr(i, j) /= static_cast<double>(n - 1);
            corr(j, i) = corr(i, j);
        }

    auto eig = jacobi_eigen(std::move(corr));
    for (double& l : eig.values) l = std::max(l, 0.0);
    model.weights = std::move(eig.vectors);
    model.eigenvalues = std::move(eig.values);
    model.components = kk;
    return model;
}

std::size_t select_count(std::span<const double> eigenvalues, const PcCountRule& rule) {
    const std::size_t k = eigenvalues.size();
    if (k == 0) throw DomainError("no eigenvalues");
    const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
    if (!(total > 0.0)) throw DomainError("eigenvalues must have a positive sum");
    switch (rule.kind) {
        case PcCountRule::Kind::fixed:
            return std::min(rule.count, k);
        case PcCountRule::Kind::explain: {
            double cum = 0.0;
            for (std::size_t l = 0; l < k; ++l) {
                cum += eigenvalues[l];
                // Relative slack so 4.5 / 5 counts as reaching 0.9.
                if (cum >= rule.threshold * total * (1.0 - 1e-12)) return l + 1;
            }
            return k;
        }
        case PcCountRule::Kind::above_mean: {
            const double mean = total / static_cast<double>(k);
            std::size_t count = 0;
            for (double l : eigenvalues)
                if (l > mean * (1.0 + 1e-10)) ++count;
            return std::max<std::size_t>(count, 1);
        }
    }
    return k;
}

namespace {

Projection rotate(const PcaModel& model, const Matrix& rows, std::span<const double> target,
                  std::span<const double> means, std::span<const double> stds) {
    const std::size_t kk = model.columns.size();
    const std::size_t l = model.components;
    if (l < 1 || l > kk) throw DomainError("model component count out of range");
    Projection out{Matrix(rows.rows(), l), std::vector<double>(l, 0.0)};
    std::vector<double> z(kk);
    auto apply = [&](auto&& value_of, std::span<double> dst) {
        for (std::size_t j = 0; j < kk; ++j) z[j] = (value_of(model.columns[j]) - means[j]) / stds[j];
        for (std::size_t c = 0; c < l; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < kk; ++j) s += z[j] * model.weights(j, c);
            dst[c] = s;
        }
    };
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        const auto src = rows.row(r);
        apply([&](std::size_t c) { return src[c]; }, out.rows.row(r));
    }
    apply([&](std::size_t c) { return target[c]; }, out.target);
    return out;
}

void check_dims(const PcaModel& model, const Matrix& rows, std::span<const double> target) {
    if (rows.cols() != model.input_columns() || target.size() != model.input_columns()) {
        throw DomainError("projection input has " + std::to_string(rows.cols()) +
                          " columns, model expects " + std::to_string(model.input_columns()));
    }
}

}  // namespace

Projection project(const PcaModel& model, const Matrix& rows, std::span<const double> target) {
    check_dims(model, rows, target);
    return rotate(model, rows, target, model.means, model.stds);
}

}  // namespace refclass
