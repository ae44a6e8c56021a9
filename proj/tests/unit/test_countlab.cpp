#include <catch2/catch_amalgamated.hpp>

#include <coda/countlab.hpp>
#include <coda/rng.hpp>

#include <cmath>
#include <vector>

using coda::DMSpec;
using coda::Matrix;
using coda::Rng;

namespace {

template <typename A, typename B>
bool same_bits(const A& a, const B& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

TEST_CASE("linear-interpolation quantile matches hand arithmetic", "[countlab]") {
    std::vector<double> v = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    // h = 9 * 0.35 = 3.15: between the 4th and 5th order statistics.
    CHECK_THAT(coda::quantile_linear(v, 0.35), Catch::Matchers::WithinAbs(4.15, 1e-12));
    CHECK(coda::quantile_linear(v, 0.0) == 1.0);
    CHECK(coda::quantile_linear(v, 1.0) == 10.0);
    CHECK_THAT(coda::quantile_linear(v, 0.5), Catch::Matchers::WithinAbs(5.5, 1e-12));
    CHECK_THROWS_AS(coda::quantile_linear({}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(coda::quantile_linear(v, 1.5), std::invalid_argument);
}

TEST_CASE("zero insertion zeroes exactly the cells below the threshold", "[countlab]") {
    Matrix counts(10, 2);
    for (Eigen::Index i = 0; i < 10; ++i) {
        counts(i, 0) = static_cast<double>(i + 1);  // 1..10
        counts(i, 1) = 7.0;
    }
    const auto z = coda::insert_zeros(counts, 0.35, {0});
    CHECK_THAT(z.plan.realized_dl(0, 0), Catch::Matchers::WithinAbs(4.15, 1e-12));
    for (Eigen::Index i = 0; i < 10; ++i) {
        const bool below = counts(i, 0) < 4.15;  // values 1,2,3,4
        CHECK(z.plan.realized_mask(i, 0) == below);
        CHECK(z.counts(i, 0) == (below ? 0.0 : counts(i, 0)));
        CHECK(z.counts(i, 1) == 7.0);  // untargeted column untouched
        CHECK_FALSE(z.plan.realized_mask(i, 1));
    }
    CHECK_THAT(z.plan.realized_zero_rate, Catch::Matchers::WithinAbs(4.0 / 20.0, 1e-15));
    CHECK(z.plan.target_columns == std::vector<int>{0});
}

TEST_CASE("zero insertion edge behavior", "[countlab]") {
    Matrix counts(10, 2);
    for (Eigen::Index i = 0; i < 10; ++i) {
        counts(i, 0) = static_cast<double>(i + 1);
        counts(i, 1) = static_cast<double>(2 * i + 1);
    }
    // Vanishing p: the interpolated threshold collapses onto the column
    // minimum in floating point and the strict comparison zeroes nothing.
    const auto z0 = coda::insert_zeros(counts, 1e-20, {0, 1});
    CHECK(z0.plan.realized_zero_rate == 0.0);
    CHECK(same_bits(z0.counts, counts));

    // A tie at the minimum pins the low quantile to the minimum itself:
    // zero cells are impossible there, which is not an error.
    Matrix tied(4, 2);
    tied << 1, 5, 1, 6, 2, 7, 3, 8;
    const auto zt = coda::insert_zeros(tied, 0.25, {0});
    CHECK(zt.plan.realized_zero_rate == 0.0);

    CHECK_THROWS_AS(coda::insert_zeros(counts, 0.0, {0}), std::invalid_argument);
    CHECK_THROWS_AS(coda::insert_zeros(counts, 1.0, {0}), std::invalid_argument);
    CHECK_THROWS_AS(coda::insert_zeros(counts, 0.3, {2}), std::invalid_argument);
    CHECK_THROWS_AS(coda::insert_zeros(counts, 0.3, {}), std::invalid_argument);
    Matrix with_zero = counts;
    with_zero(0, 0) = 0.0;
    CHECK_THROWS_AS(coda::insert_zeros(with_zero, 0.3, {0}), std::invalid_argument);
}

TEST_CASE("every-second rule targets 1-based even columns", "[countlab]") {
    Rng rng(2);
    Matrix counts(30, 5);
    for (Eigen::Index i = 0; i < counts.rows(); ++i)
        for (Eigen::Index j = 0; j < counts.cols(); ++j)
            counts(i, j) = std::floor(rng.uniform(1.0, 100.0));
    const auto z = coda::insert_zeros_every_second(counts, 0.4);
    CHECK(z.plan.target_columns == std::vector<int>{1, 3});
    for (Eigen::Index j : {0, 2, 4})
        CHECK(same_bits(z.counts.col(j), counts.col(j)));
    CHECK(z.plan.realized_zero_rate > 0.0);
    // Mask stays inside the targeted columns.
    for (Eigen::Index i = 0; i < counts.rows(); ++i)
        for (Eigen::Index j : {0, 2, 4}) CHECK_FALSE(z.plan.realized_mask(i, j));
}

TEST_CASE("dirichlet-multinomial rows sum to the depth exactly", "[countlab]") {
    DMSpec spec;
    spec.alpha = {4.0, 2.0, 1.0};
    spec.depth = 1000;
    spec.n = 200;
    Rng a(31), b(31);
    const Matrix x = coda::simulate_dm(spec, a);
    const Matrix y = coda::simulate_dm(spec, b);
    CHECK(same_bits(x, y));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        CHECK(x.row(i).sum() == 1000.0);
        CHECK((x.row(i).array() >= 0.0).all());
    }
}

TEST_CASE("dirichlet-multinomial means converge to the prior mean", "[countlab]") {
    DMSpec spec;
    spec.depth = 1000;
    spec.n = 100000;
    struct Case {
        std::vector<double> alpha;
        std::vector<double> want;
    };
    const std::vector<Case> cases = {
        {{6.0, 3.0, 1.0}, {0.6, 0.3, 0.1}},
        {{4.0, 2.0, 1.0}, {4.0 / 7, 2.0 / 7, 1.0 / 7}},
    };
    std::uint64_t seed = 91;
    for (const auto& c : cases) {
        spec.alpha = c.alpha;
        Rng rng(seed++);
        const Matrix x = coda::simulate_dm(spec, rng);
        for (Eigen::Index j = 0; j < 3; ++j) {
            const double mean_prop = x.col(j).mean() / static_cast<double>(spec.depth);
            CHECK_THAT(mean_prop, Catch::Matchers::WithinAbs(c.want[static_cast<std::size_t>(j)],
                                                             0.005));
        }
    }
}

TEST_CASE("ceiling quantization arithmetic", "[countlab]") {
    Matrix x(2, 2);
    x << 10, 5, 12, 6;
    CHECK(same_bits(coda::quantize_scale(x, 1.0), x));  // identity on integers
    const Matrix q = coda::quantize_scale(x, 0.1);
    CHECK(q(0, 0) == 1.0);
    CHECK(q(0, 1) == 1.0);
    CHECK(q(1, 0) == 2.0);
    CHECK(q(1, 1) == 1.0);
    // Distinct compositions collapse onto the same lattice point.
    Matrix collapse(2, 2);
    collapse << 10, 5, 10, 5;
    CHECK(q(0, 0) == q(0, 1));

    Matrix v(1, 2);
    v << 86, 0;
    const Matrix qv = coda::quantize_scale(v, 0.1);
    CHECK(qv(0, 0) == 9.0);  // ceil(8.6)
    CHECK(qv(0, 1) == 0.0);  // zero stays zero
    CHECK_THROWS_AS(coda::quantize_scale(v, 0.0), std::invalid_argument);
}

TEST_CASE("ceiling quantization is monotone", "[countlab]") {
    Rng rng(7);
    for (int t = 0; t < 200; ++t) {
        const double a = std::floor(rng.uniform(0.0, 500.0));
        const double b = a + std::floor(rng.uniform(0.0, 500.0));
        const double s = rng.uniform(0.001, 1.0);
        Matrix m(1, 2);
        m << a, b;
        const Matrix q = coda::quantize_scale(m, s);
        CHECK(q(0, 0) <= q(0, 1));
    }
}

TEST_CASE("log-ratio shift experiment at native scale is exactly zero", "[countlab]") {
    DMSpec spec;
    spec.alpha = {6.0, 3.0, 1.0};
    spec.depth = 1000;
    spec.n = 100;
    Rng rng(123);
    const auto exp = coda::logratio_shift_experiment(spec, {1.0, 0.1, 0.01, 0.001}, rng);
    REQUIRE(exp.per_scale.size() == 4);

    // Scale 1 is the self-reference: every kept sample shifts by exactly 0.
    for (const auto& row : exp.shifts)
        if (row.scale == 1.0) CHECK(row.lr_shift == 0.0);

    // The drop rule (first or second part zero) does not depend on the
    // scale, because ceil(s*x) >= 1 whenever x > 0.
    for (const auto& s : exp.per_scale) {
        CHECK(s.n_kept + s.n_dropped == spec.n);
        CHECK(s.n_kept == exp.per_scale[0].n_kept);
    }
    std::size_t total_kept = 0;
    for (const auto& s : exp.per_scale) total_kept += static_cast<std::size_t>(s.n_kept);
    CHECK(exp.shifts.size() == total_kept);

    // Native scale sits near log10(2); the harshest scale collapses every
    // cell of a depth-1000 dataset to 1, pinning the ratio at exactly 1.
    CHECK_THAT(exp.per_scale[0].mean_lr, Catch::Matchers::WithinAbs(0.301, 0.04));
    CHECK(exp.per_scale[3].mean_lr == 0.0);

    Rng rng2(123);
    const auto exp2 = coda::logratio_shift_experiment(spec, {1.0, 0.1, 0.01, 0.001}, rng2);
    CHECK(same_bits(exp.raw, exp2.raw));
    REQUIRE(exp2.shifts.size() == exp.shifts.size());
    for (std::size_t k = 0; k < exp.shifts.size(); ++k)
        CHECK(exp.shifts[k].lr_shift == exp2.shifts[k].lr_shift);
}

TEST_CASE("log-ratio drift appears once the depth outruns the lattice", "[countlab]") {
    // At depth 10^4 the harshest scale no longer collapses everything to 1:
    // the ceiling bias inflates the small part more than the large one and
    // the mean log-ratio drifts below its native value.
    DMSpec spec;
    spec.alpha = {6.0, 3.0, 1.0};
    spec.depth = 10000;
    spec.n = 2000;
    Rng rng(321);
    const auto exp = coda::logratio_shift_experiment(spec, {1.0, 0.001}, rng);
    REQUIRE(exp.per_scale.size() == 2);
    CHECK_THAT(exp.per_scale[0].mean_lr, Catch::Matchers::WithinAbs(0.301, 0.01));
    CHECK(exp.per_scale[1].mean_lr < 0.292);
    CHECK(exp.per_scale[1].mean_lr > 0.25);
}

TEST_CASE("zero-free generator removes every zero at a workable depth", "[countlab]") {
    Rng gen(55);
    Matrix counts(6, 5);
    for (Eigen::Index i = 0; i < counts.rows(); ++i)
        for (Eigen::Index j = 0; j < counts.cols(); ++j)
            counts(i, j) = gen.bernoulli(0.4) ? 0.0 : std::floor(gen.uniform(1.0, 50.0));
    counts(0, 0) = std::max(counts(0, 0), 1.0);  // keep at least one positive cell per row
    Rng a(77), b(77);
    const auto ra = coda::make_zero_free(counts, 100000, a);
    const auto rb = coda::make_zero_free(counts, 100000, b);
    CHECK(same_bits(ra.counts, rb.counts));
    CHECK((ra.counts.array() > 0.0).all());
    CHECK(ra.depth_used == 100000LL << ra.retries);
    for (Eigen::Index i = 0; i < ra.counts.rows(); ++i)
        CHECK(std::abs(ra.counts.row(i).sum() - static_cast<double>(ra.depth_used)) <=
              0.5 * static_cast<double>(counts.cols()));
}

TEST_CASE("zero-free generator doubles the depth when rounding drops cells", "[countlab]") {
    // Depth 1 cannot host three positive cells (rounding needs every part
    // at or above one half), so at least one doubling is forced.
    Matrix zeros = Matrix::Zero(1, 3);
    Rng rng(8);
    const auto r = coda::make_zero_free(zeros, 1, rng);
    CHECK(r.retries >= 1);
    CHECK(r.depth_used == 1LL << r.retries);
    CHECK((r.counts.array() > 0.0).all());
}

TEST_CASE("zero-free generator reports an impossible depth", "[countlab]") {
    // 2050 parts cannot all reach one half-cell within ten doublings from
    // depth 1 (the shares would have to sum beyond 1).
    Matrix zeros = Matrix::Zero(1, 2050);
    Rng rng(9);
    CHECK_THROWS_AS(coda::make_zero_free(zeros, 1, rng), std::runtime_error);

    Matrix neg(1, 3);
    neg << -1.0, 2.0, 3.0;
    CHECK_THROWS_AS(coda::make_zero_free(neg, 100, rng), std::invalid_argument);
    Matrix ok = Matrix::Ones(1, 3);
    CHECK_THROWS_AS(coda::make_zero_free(ok, 0, rng), std::invalid_argument);
}

TEST_CASE("zero-free generator scales to a wide sparse matrix", "[countlab]") {
    // Moderate stand-in for the wide-matrix use: heavy sparsity forces tiny
    // posterior shares, which a large starting depth absorbs.
    Rng gen(66);
    Matrix counts(20, 50);
    for (Eigen::Index i = 0; i < counts.rows(); ++i)
        for (Eigen::Index j = 0; j < counts.cols(); ++j)
            counts(i, j) = gen.bernoulli(0.6) ? 0.0 : std::floor(gen.uniform(1.0, 30.0));
    Rng rng(14);
    const auto r = coda::make_zero_free(counts, 1LL << 32, rng);
    CHECK((r.counts.array() > 0.0).all());
    for (Eigen::Index i = 0; i < r.counts.rows(); ++i)
        CHECK(std::abs(r.counts.row(i).sum() - static_cast<double>(r.depth_used)) <=
              0.5 * static_cast<double>(counts.cols()));
}
