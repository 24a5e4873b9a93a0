#include "respire/dataio.hpp"
#include "respire/evaluation.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

using namespace respire;

namespace {

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

// Paired t statistic written out from the textbook formula.
double hand_t(const VectorXd &a, const VectorXd &b) {
    const VectorXd d = a - b;
    const double n = static_cast<double>(d.size());
    double mean = 0.0;
    for (Index i = 0; i < d.size(); ++i) mean += d(i);
    mean /= n;
    double ss = 0.0;
    for (Index i = 0; i < d.size(); ++i) ss += (d(i) - mean) * (d(i) - mean);
    return mean / std::sqrt(ss / (n - 1.0) / n);
}

// Sum of squared residuals after dropping the m largest |residuals|, around the retained mean.
double retained_ss_res(const VectorXd &y, const VectorXd &yhat, Index m) {
    const VectorXd r = (y - yhat).cwiseAbs();
    std::vector<Index> order(static_cast<std::size_t>(r.size()));
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return r(a) > r(b); });
    double s = 0.0;
    for (std::size_t i = static_cast<std::size_t>(m); i < order.size(); ++i) s += r(order[i]) * r(order[i]);
    return s;
}

}  // namespace

TEST_SUITE("evaluation") {
    TEST_CASE("r2 examples") {
        const VectorXd y = vec({0, 1, 2});
        CHECK(r2(y, y) == 1.0);
        CHECK(r2(y, VectorXd::Constant(3, 1.0)) == 0.0);
        CHECK(r2(y, vec({0, 1, 1})) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(r2(y, vec({10, 10, 10})) < -50.0);
        CHECK_THROWS_AS((void)r2(VectorXd::Constant(4, 2.0), vec({1, 2, 3, 4})), Error);
        CHECK_THROWS_AS((void)r2(y, vec({1, 2})), Error);
    }

    TEST_CASE("r2 is invariant to a shared positive affine map") {
        std::mt19937_64 rng(2);
        for (int t = 0; t < 50; ++t) {
            const VectorXd y = oracle::normal(rng, 30);
            const VectorXd yhat = y + 0.5 * oracle::normal(rng, 30);
            const double a = std::exp(oracle::normal(rng, 1)(0)), b = 10.0 * oracle::normal(rng, 1)(0);
            const VectorXd ya = (a * y.array() + b).matrix(), yhata = (a * yhat.array() + b).matrix();
            CHECK(r2(ya, yhata) == doctest::Approx(r2(y, yhat)).epsilon(1e-10));
        }
    }

    TEST_CASE("robust r2 examples") {
        std::mt19937_64 rng(5);
        const VectorXd y = oracle::normal(rng, 20), yhat = y + oracle::normal(rng, 20);
        CHECK(robust_r2(y, yhat, 0.0) == r2(y, yhat));
        for (double d : {0.0, 0.1, 0.5}) CHECK(robust_r2(y, y, d) == 1.0);
        CHECK(robust_r2(vec({0, 1, 2, 100}), vec({0, 1, 2, 3}), 0.25) == 1.0);
        CHECK_THROWS_AS((void)robust_r2(y, yhat, 1.0), Error);
        CHECK_THROWS_AS((void)robust_r2(vec({0, 1, 2}), vec({0, 1, 2}), 0.9), Error);
    }

    TEST_CASE("robust r2 drops ties from the lower index first") {
        // Residuals 5 at indices 1 and 2; delta drops one point, which must be index 1.
        const VectorXd y = vec({0, 5, 0, 1, 2, 3}), yhat = vec({0, 0, 5, 1, 2, 3});
        VectorXd ry(5), ryh(5);
        ry << 0, 0, 1, 2, 3;
        ryh << 0, 5, 1, 2, 3;
        CHECK(robust_r2(y, yhat, 1.0 / 6.0) == doctest::Approx(r2(ry, ryh)).epsilon(1e-15));
    }

    TEST_CASE("robust r2 monotonicity in delta") {
        // The retained residual sum of squares cannot grow as more of the largest residuals are
        // removed. The R^2 itself also depends on the retained variance, so it is only expected to
        // be monotone; any counterexamples are reported.
        std::mt19937_64 rng(2024);
        const std::vector<double> deltas{0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3};
        int r2_counterexamples = 0, ss_violations = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            const Index n = 20 + static_cast<Index>(rng() % 80);
            const VectorXd y = oracle::normal(rng, n);
            VectorXd yhat = y + 0.3 * oracle::normal(rng, n);
            yhat(static_cast<Index>(rng() % static_cast<std::uint64_t>(n))) += 5.0;
            double prev = -INFINITY, prev_ss = INFINITY;
            for (double d : deltas) {
                const double v = robust_r2(y, yhat, d);
                if (v < prev - 1e-12) ++r2_counterexamples;
                prev = v;
                const auto m = static_cast<Index>(std::ceil(d * static_cast<double>(n) - 1e-9));
                const double ss = retained_ss_res(y, yhat, m);
                if (ss > prev_ss + 1e-12) ++ss_violations;
                prev_ss = ss;
            }
        }
        MESSAGE("robust R^2 monotonicity counterexamples over 1000 instances: " << r2_counterexamples);
        CHECK(ss_violations == 0);
    }

    TEST_CASE("win counts") {
        ScoreTable one{{"A", {{"e1", 0.3}, {"e2", -1.0}}}};
        CHECK(win_counts(one).at("A") == 2);

        ScoreTable close{{"A", {{"e", 0.9}}}, {"B", {{"e", 0.895}}}};
        const auto w = win_counts(close, 0.01);
        CHECK(w.at("A") == 1);
        CHECK(w.at("B") == 1);

        ScoreTable far{{"A", {{"e", 0.9}}}, {"B", {{"e", 0.5}}}};
        const auto f = win_counts(far, 0.01);
        CHECK(f.at("A") == 1);
        CHECK(f.at("B") == 0);

        ScoreTable missing{{"A", {{"e", std::nan("")}}}, {"B", {{"e", 0.1}}}, {"C", {{"f", 0.2}}}};
        const auto m = win_counts(missing, 0.0);
        CHECK(m.at("A") == 0);
        CHECK(m.at("B") == 1);
        CHECK(m.at("C") == 1);
    }

    TEST_CASE("win counts total at least the number of experiments") {
        std::mt19937_64 rng(9);
        for (int t = 0; t < 100; ++t) {
            ScoreTable s;
            for (const char *method : {"RESPIRE", "RR", "KRR"})
                for (int e = 0; e < 6; ++e) s[method]["e" + std::to_string(e)] = oracle::uniform(rng, 1, 0, 1)(0);
            int total = 0;
            for (const auto &[k, v] : win_counts(s, 0.01)) total += v;
            CHECK(total >= 6);
        }
    }

    TEST_CASE("smoothness index") {
        CHECK(smoothness_index(VectorXd::Constant(10, 4.2)) == 1.0);
        CHECK(smoothness_index(VectorXd::LinSpaced(30, -1, 5)) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(smoothness_index(vec({0, 1, 0})) == 2.0);
        CHECK(smoothness_index(vec({0, 3, 1, 2})) == 2.0);  // TV 6 over range 3
        std::mt19937_64 rng(1);
        for (int t = 0; t < 50; ++t) CHECK(smoothness_index(oracle::normal(rng, 40)) >= 1.0);
    }

    TEST_CASE("overfit flag") {
        SemiParamModel<double> model;
        model.spec = KernelSpec<double>(KernelFamily::Gaussian, 0.2);
        model.z_train = VectorXd::LinSpaced(5, 0, 1);
        model.weights = MatrixXd::Zero(5, 2);
        model.bias = VectorXd::Zero(5);
        model.z_norm = {10.0, 30.0};
        SUBCASE("zero model") {
            const auto r = overfit_flag(model);
            CHECK_FALSE(r.flagged);
            CHECK(r.max_index() == 1.0);
            const VectorXd g = training_z_grid(model);
            CHECK(g.size() == 200);
            CHECK(g(0) == 10.0);
            CHECK(g(199) == 30.0);
        }
        SUBCASE("affine curves") {
            WeightCurves<double> c{VectorXd::LinSpaced(200, 0, 1), MatrixXd(200, 2), VectorXd::LinSpaced(200, 3, -1)};
            c.weights.col(0) = VectorXd::LinSpaced(200, 0, 2);
            c.weights.col(1) = VectorXd::Constant(200, 0.5);
            CHECK_FALSE(overfit_flag(c).flagged);
        }
        SUBCASE("oscillating curve") {
            WeightCurves<double> c{VectorXd::LinSpaced(200, 0, 1), MatrixXd::Zero(200, 2), VectorXd::Zero(200)};
            for (Index i = 0; i < 200; ++i) c.weights(i, 1) = std::sin(0.5 * static_cast<double>(i));
            const auto r = overfit_flag(c, 3.0);
            CHECK(r.flagged);
            CHECK(r.w2_index > 3.0);
            CHECK(r.max_index() == r.w2_index);
            CHECK_FALSE(overfit_flag(c, 1e6).flagged);
        }
    }

    TEST_CASE("paired t-test against the hand formula") {
        const VectorXd a = vec({12.1, 14.3, 11.8, 13.0, 15.2}), b = vec({11.0, 13.9, 12.2, 11.7, 14.1});
        const auto r = paired_ttest(a, b);
        CHECK(r.t == doctest::Approx(hand_t(a, b)).epsilon(1e-10));
        CHECK(std::abs(r.t - 2.224746041573052) <= 1e-6);
        // Reference p-value computed independently with a statistics package.
        CHECK(std::abs(r.p - 0.0901354606016669) <= 1e-8);

        const VectorXd c = vec({0.91, 0.88, 0.93, 0.79, 0.85, 0.90, 0.87, 0.92});
        const VectorXd d = vec({0.89, 0.86, 0.90, 0.80, 0.81, 0.85, 0.88, 0.90});
        const auto s = paired_ttest(c, d);
        CHECK(std::abs(s.t - 2.6457513110645907) <= 1e-6);
        CHECK(std::abs(s.p - 0.033145500263773664) <= 1e-8);
    }

    TEST_CASE("paired t-test p-values against closed forms") {
        // Two-sided p for df = 1: 1 - (2/pi) atan|t|. For df = 2: 1 - |t| / sqrt(t^2 + 2).
        // Samples of size 2 and 3 with a chosen t are built from d = (m + u, m - u[, m]).
        for (double t : {0.3, 1.0, 4.0, 25.0}) {
            // n = 2: d = (m + u, m - u), sd = u sqrt(2), se = u, t = m / u.
            const VectorXd a2 = vec({t + 1.0, t - 1.0}), zero2 = VectorXd::Zero(2);
            const auto r = paired_ttest(a2, zero2);
            CHECK(r.t == doctest::Approx(t).epsilon(1e-12));
            CHECK(r.p == doctest::Approx(1.0 - 2.0 / std::numbers::pi * std::atan(t)).epsilon(1e-9));
        }
        {
            const auto r = paired_ttest(vec({2.0, 0.0}), VectorXd::Zero(2));
            CHECK(r.p == doctest::Approx(0.5).epsilon(1e-12));
        }
        for (double t : {0.5, 2.0, 5.0}) {
            // n = 3: d = (m + 1, m - 1, m): sd = 1, se = 1/sqrt(3), t = m sqrt(3).
            const double m = t / std::sqrt(3.0);
            const auto r = paired_ttest(vec({m + 1.0, m - 1.0, m}), VectorXd::Zero(3));
            CHECK(r.t == doctest::Approx(t).epsilon(1e-12));
            CHECK(r.p == doctest::Approx(1.0 - t / std::sqrt(t * t + 2.0)).epsilon(1e-9));
        }
        CHECK(std::abs(1.0 - 5.0 / std::sqrt(27.0) - 0.037749551350623724) < 1e-15);
    }

    TEST_CASE("paired t-test conventions and antisymmetry") {
        const VectorXd a = vec({1, 2, 3});
        const auto same = paired_ttest(a, a);
        CHECK(same.t == 0.0);
        CHECK(same.p == 1.0);
        const auto shift = paired_ttest(VectorXd::Constant(4, 2.0), VectorXd::Constant(4, 1.0));
        CHECK(shift.t == std::numeric_limits<double>::infinity());
        CHECK(shift.p == 0.0);
        CHECK(paired_ttest(VectorXd::Constant(4, 1.0), VectorXd::Constant(4, 2.0)).t ==
              -std::numeric_limits<double>::infinity());
        CHECK_THROWS_AS((void)paired_ttest(vec({1}), vec({2})), Error);
        CHECK_THROWS_AS((void)paired_ttest(vec({1, 2}), vec({2})), Error);

        std::mt19937_64 rng(77);
        for (int t = 0; t < 30; ++t) {
            const VectorXd x = oracle::normal(rng, 12), y = oracle::normal(rng, 12);
            const auto f = paired_ttest(x, y), g = paired_ttest(y, x);
            CHECK(f.t == -g.t);
            CHECK(f.p == doctest::Approx(g.p).epsilon(1e-14));
            CHECK(f.p >= 0.0);
            CHECK(f.p <= 1.0);
        }
    }

    TEST_CASE("evaluation report") {
        const VectorXd y = vec({0, 1, 2, 100}), yhat = vec({0, 1, 2, 3});
        const auto rep = evaluate("RESPIRE", "T-W", y, yhat, {0.0, 0.25});
        CHECK(rep.n == 4);
        CHECK(rep.r2 == r2(y, yhat));
        CHECK(rep.robust_at(0.25) == 1.0);
        CHECK(rep.residuals == y - yhat);
        CHECK(std::isnan(rep.robust_at(0.5)));
        CHECK_THROWS_AS((void)evaluate("m", "d", y, yhat, {0.25, 0.0}), Error);

        std::ostringstream csv;
        write_robust_curve_csv(csv, rep);
        // Mean 25.75: SS_tot = 7352.75, SS_res = 97^2.
        CHECK(rep.r2 == doctest::Approx(1.0 - 9409.0 / 7352.75).epsilon(1e-14));
        CHECK(csv.str() == "delta,r2\n0," + format_double(rep.r2) + "\n0.25,1\n");
        const auto &defaults = default_robust_deltas();
        CHECK(std::is_sorted(defaults.begin(), defaults.end()));
        std::ostringstream summary;
        write_summary(summary, rep);
        CHECK(summary.str().find("T-W") != std::string::npos);
    }
}
