#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "refclass/errors.hpp"
#include "refclass/pca.hpp"

using namespace refclass;

namespace {

Matrix from_columns(const std::vector<std::vector<double>>& cols) {
    Matrix m(cols[0].size(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (std::size_t r = 0; r < cols[c].size(); ++r) m(r, c) = cols[c][r];
    return m;
}

std::vector<std::vector<double>> columns_of(const Matrix& m) {
    std::vector<std::vector<double>> out;
    for (std::size_t c = 0; c < m.cols(); ++c) out.push_back(m.column(c));
    return out;
}

double sample_variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

/// Random correlated matrix: mixes independent normals through a random loading.
Matrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t k) {
    std::normal_distribution<double> g;
    Matrix load(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) load(i, j) = g(rng);
    Matrix raw(n, k);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < k; ++c) raw(r, c) = g(rng);
    return raw * load;
}

}  // namespace

TEST_CASE("pre-transforms") {
    CHECK(signed_fifth_root(-32) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(signed_fifth_root(0) == 0.0);

    std::vector<double> a(25), b(25);
    for (std::size_t i = 0; i < 25; ++i) {
        a[i] = 5.0 + 2.0 * static_cast<double>(i);
        b[i] = std::sin(static_cast<double>(i));
    }
    const std::vector<double> target{8.0, 0.1};
    const auto r = pre_transform(from_columns({a, b}), target, PreTransform::ranks);
    for (std::size_t i = 0; i < 25; ++i) CHECK(r.data(i, 0) == static_cast<double>(i + 1));
    CHECK(r.target[0] == 3.0);  // 5, 7 below 8
    const auto f = pre_transform(from_columns({a, b}), target, PreTransform::signed_fifth_root);
    CHECK(f.data(3, 0) == doctest::Approx(std::pow(11.0, 0.2)));

    CHECK_THROWS_AS(pre_transform(Matrix(19, 2), target, PreTransform::identity), DegenerateError);
    CHECK_THROWS_AS(pre_transform(from_columns({a}), std::vector<double>{1.0}, PreTransform::identity),
                    DomainError);
}

TEST_CASE("trim drops the outer 2.5% of every column") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    std::vector<double> a(1000), b(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
        a[i] = g(rng);
        b[i] = g(rng);
    }
    a[17] = 1e6;
    a[400] = -1e6;
    const std::vector<double> target{0.0, 0.0};
    const auto t = pre_transform(from_columns({a, b}), target, PreTransform::trim);
    CHECK(t.data.rows() <= 950);
    CHECK(t.data.rows() >= 900);
    CHECK(t.target == target);
    // every survivor lies strictly inside the 25th smallest and 25th largest of each column
    for (const auto* col : {&a, &b}) {
        auto s = *col;
        std::sort(s.begin(), s.end());
        const double lo = s[24], hi = s[975];
        for (std::size_t r : t.retained_rows) {
            CHECK((*col)[r] > lo);
            CHECK((*col)[r] < hi);
        }
    }
    CHECK(std::find(t.retained_rows.begin(), t.retained_rows.end(), 17u) == t.retained_rows.end());
    CHECK(std::find(t.retained_rows.begin(), t.retained_rows.end(), 400u) == t.retained_rows.end());
}

TEST_CASE("perfectly correlated columns") {
    std::vector<double> a(30), b(30);
    for (std::size_t i = 0; i < 30; ++i) {
        a[i] = std::cos(static_cast<double>(i) * 0.7);
        b[i] = 3.0 * a[i] + 1.0;
    }
    const auto m = fit(from_columns({a, b}));
    CHECK(m.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(m.eigenvalues[1]) <= 1e-12);
    CHECK(std::abs(m.weights(0, 0)) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(m.weights(0, 0) == doctest::Approx(m.weights(1, 0)).epsilon(1e-12));
}

TEST_CASE("independent columns approach unit eigenvalues") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g;
    std::vector<double> a(100000), b(100000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = g(rng);
        b[i] = g(rng);
    }
    const auto m = fit(from_columns({a, b}));
    CHECK(std::abs(m.eigenvalues[0] - 1.0) <= 0.05);
    CHECK(std::abs(m.eigenvalues[1] - 1.0) <= 0.05);
}

TEST_CASE("duplicated pair plus an independent column") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::vector<double> a(5000), c(5000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = g(rng);
        c[i] = g(rng);
    }
    const auto cols = std::vector<std::vector<double>>{a, a, c};
    const auto m = fit(from_columns(cols));
    const auto corr = oracle::correlation(cols);
    CHECK(m.eigenvalues[0] == doctest::Approx(1.0 + std::sqrt(1.0 + 0.0)).epsilon(0.05));
    CHECK(m.eigenvalues[1] == doctest::Approx(1.0).epsilon(0.05));
    CHECK(std::abs(m.eigenvalues[2]) <= 1e-9);
    // the oracle eigenvector of the correlation matrix agrees with the fit
    const auto v = oracle::leading_eigenvector(corr);
    for (std::size_t i = 0; i < 3; ++i) CHECK(m.weights(i, 0) == doctest::Approx(v[i]).epsilon(1e-6));
}

TEST_CASE("constant columns are dropped") {
    std::vector<double> a(25, 4.0), b(25);
    for (std::size_t i = 0; i < 25; ++i) b[i] = static_cast<double>(i * i);
    const auto m = fit(from_columns({a, b, b}));
    CHECK(m.dropped == std::vector<std::size_t>{0});
    CHECK(m.columns == std::vector<std::size_t>{1, 2});
    CHECK(m.input_columns() == 3);
    CHECK_THROWS_AS(fit(from_columns({a, a})), DegenerateError);
}

TEST_CASE("pc count rules") {
    CHECK(select_count(std::vector<double>{2, 0}, PcCountRule::explain(0.75)) == 1);
    CHECK(select_count(std::vector<double>{1, 1, 1}, PcCountRule::above_mean()) == 1);
    CHECK(select_count(std::vector<double>{3, 1, 0.5, 0.5}, PcCountRule::explain(0.90)) == 3);
    CHECK(select_count(std::vector<double>{3, 1, 0.5, 0.5}, PcCountRule::explain(0.75)) == 2);
    CHECK(select_count(std::vector<double>{3, 1, 0.5, 0.5}, PcCountRule::above_mean()) == 1);
    CHECK(select_count(std::vector<double>{2, 1.5, 0.5}, PcCountRule::above_mean()) == 2);
    CHECK(select_count(std::vector<double>{1.5, 0.5}, PcCountRule::fixed(3)) == 2);
    CHECK(PcCountRule::parse("75%") == PcCountRule::explain(0.75));
    CHECK(PcCountRule::parse("mean") == PcCountRule::above_mean());
    CHECK(PcCountRule::parse("2") == PcCountRule::fixed(2));
    CHECK(PcCountRule::explain(0.9).name() == "90%");
    CHECK_THROWS_AS(PcCountRule::parse("zero"), ParseError);
    CHECK(all_pc_rules().size() == 5);
    CHECK(all_pre_transforms().size() == 4);
}

TEST_CASE("projection") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    std::vector<double> a(200), b(200);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = g(rng);
        b[i] = 0.8 * a[i] + 0.6 * g(rng);
    }
    const Matrix x = from_columns({a, b});
    auto m = fit(x);
    m.components = 1;
    const std::vector<double> centre{m.means[0], m.means[1]};
    const auto at_mean = project(m, x, centre);
    CHECK(std::abs(at_mean.target[0]) <= 1e-12);
    // first coordinate of a 2x2 correlation PCA is (z1 + z2) / sqrt(2) for positive correlation
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double z1 = (a[i] - m.means[0]) / m.stds[0];
        const double z2 = (b[i] - m.means[1]) / m.stds[1];
        CHECK(at_mean.rows(i, 0) == doctest::Approx((z1 + z2) / std::sqrt(2.0)).epsilon(1e-10));
    }
    CHECK_THROWS_AS(project(m, Matrix(3, 3), std::vector<double>{0, 0, 0}), DomainError);
}

TEST_CASE("property: eigen-decomposition integrity on random matrices") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<std::size_t> rows(20, 400), cols(2, 12);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = rows(rng), k = cols(rng);
        const Matrix x = random_matrix(rng, n, k);
        const auto m = fit(x);
        const auto corr = oracle::correlation(columns_of(x));
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            sum += m.eigenvalues[i];
            CHECK(m.eigenvalues[i] >= 0.0);
            if (i > 0) CHECK(m.eigenvalues[i] <= m.eigenvalues[i - 1]);
            for (std::size_t r = 0; r < k; ++r) {
                double cv = 0.0;
                for (std::size_t c = 0; c < k; ++c) cv += corr[r][c] * m.weights(c, i);
                CHECK(std::abs(cv - m.eigenvalues[i] * m.weights(r, i)) <= 1e-8);
            }
            for (std::size_t j = 0; j < k; ++j) {
                double dot = 0.0;
                for (std::size_t r = 0; r < k; ++r) dot += m.weights(r, i) * m.weights(r, j);
                CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-8);
            }
        }
        CHECK(std::abs(sum - static_cast<double>(k)) <= 1e-9);

        const auto p = project(m, x, std::vector<double>(k, 0.0));
        for (std::size_t l = 1; l < k; ++l) {
            CHECK(sample_variance(p.rows.column(l)) <= sample_variance(p.rows.column(l - 1)) + 1e-9);
        }
        const auto again = fit(x);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) CHECK(again.weights(i, j) == m.weights(i, j));
    }
}

TEST_CASE("property: ranks pre-transform removes monotone distortions") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix x = random_matrix(rng, 150, 4);
        Matrix bent = x;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            bent(r, 0) = std::exp(x(r, 0));
            bent(r, 2) = std::pow(x(r, 2), 3) + 2.0;
        }
        const std::vector<double> t{0.1, 0.2, 0.3, 0.4};
        const std::vector<double> tb{std::exp(0.1), 0.2, std::pow(0.3, 3) + 2.0, 0.4};
        const auto m1 = fit(pre_transform(x, t, PreTransform::ranks).data);
        const auto m2 = fit(pre_transform(bent, tb, PreTransform::ranks).data);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(m1.eigenvalues[i] == doctest::Approx(m2.eigenvalues[i]).epsilon(1e-12));
            for (std::size_t j = 0; j < 4; ++j) CHECK(m1.weights(i, j) == doctest::Approx(m2.weights(i, j)).epsilon(1e-9));
        }
    }
}
