#include "respire/evaluation.hpp"
#include "respire/synthlab.hpp"
#include "respire/tuning.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace respire;

namespace {

AlignedDataset calibration(std::uint64_t seed, Index n, double outliers = 0.0, double train_frac = 0.8) {
    CalibrationSpec cs;
    cs.n = n;
    cs.seed = seed;
    cs.outlier_fraction = outliers;
    cs.train_frac = train_frac;
    return generate_calibration(cs).data;
}

std::vector<Index> range(Index a, Index b) {
    std::vector<Index> v;
    for (Index i = a; i < b; ++i) v.push_back(i);
    return v;
}

}  // namespace

TEST_SUITE("tuning") {
    TEST_CASE("k-fold splits") {
        const auto nine = kfold_splits(9, 3);
        REQUIRE(nine.size() == 3);
        for (int f = 0; f < 3; ++f) CHECK(nine[static_cast<std::size_t>(f)].second == range(3 * f, 3 * f + 3));

        const auto ten = kfold_splits(10, 3);
        CHECK(ten[0].second == range(0, 4));
        CHECK(ten[1].second == range(4, 7));
        CHECK(ten[2].second == range(7, 10));

        for (Index n : {3, 7, 31, 100})
            for (int k : {2, 3, 5}) {
                if (n < k) continue;
                std::multiset<Index> seen;
                std::size_t lo = static_cast<std::size_t>(n), hi = 0;
                for (const auto &[fit, hold] : kfold_splits(n, k)) {
                    seen.insert(hold.begin(), hold.end());
                    CHECK(fit.size() + hold.size() == static_cast<std::size_t>(n));
                    std::set<Index> both(fit.begin(), fit.end());
                    both.insert(hold.begin(), hold.end());
                    CHECK(both.size() == static_cast<std::size_t>(n));
                    CHECK(hold.back() - hold.front() + 1 == static_cast<Index>(hold.size()));
                    lo = std::min(lo, hold.size());
                    hi = std::max(hi, hold.size());
                }
                CHECK(seen.size() == static_cast<std::size_t>(n));
                CHECK(std::set<Index>(seen.begin(), seen.end()).size() == static_cast<std::size_t>(n));
                CHECK(hi - lo <= 1);
            }
        CHECK_THROWS_AS((void)kfold_splits(2, 3), Error);
        CHECK_THROWS_AS((void)kfold_splits(10, 1), Error);
    }

    TEST_CASE("fold fit portion is renormalized on itself") {
        const auto ds = calibration(1, 60);
        const auto folds = kfold_splits(ds, 3);
        const auto fit = fold_fit_portion(ds, folds[1]);
        CHECK(fit.size() == 40);
        CHECK(fit.z.minCoeff() == 0.0);
        CHECK(fit.z.maxCoeff() == 1.0);
        CHECK(fit.norm.min == fit.temp.minCoeff());
    }

    TEST_CASE("grid shape and order") {
        HyperGrid g;
        CHECK(g.size() == 5u * 5u * 4u * 5u);
        const auto cells = g.cells();
        CHECK(cells.size() == g.size());
        CHECK(cells[0].alpha == 0.0);
        CHECK(cells[0].lambda == 0.1);
        CHECK(cells[1].lambda == 0.5);
        CHECK(cells[5].eta == 0.4);
        CHECK(cells[20].q_ls == 0.3);
        CHECK(cells[100].alpha == 0.05);
        g.eta = {};
        CHECK_THROWS_AS(g.validate(), Error);
        g.eta = {1.5};
        CHECK_THROWS_AS(g.validate(), Error);
    }

    TEST_CASE("single cell grid returns that cell") {
        HyperGrid g;
        g.alpha = {0.1};
        g.q_ls = {0.7};
        g.eta = {0.4};
        g.lambda = {5.0};
        const auto r = grid_search(calibration(2, 90), g, 3);
        CHECK(r.best.alpha == 0.1);
        CHECK(r.best.q_ls == 0.7);
        CHECK(r.best.eta == 0.4);
        CHECK(r.best.lambda == 5.0);
        REQUIRE(r.table.size() == 1);
        CHECK(r.best_score == r.table[0].mean_r2);
    }

    TEST_CASE("cross-validation scores match a direct recomputation") {
        const auto train = calibration(3, 120, 0.05);
        HyperGrid g;
        g.alpha = {0.0, 0.1};
        g.q_ls = {0.3};
        g.eta = {0.7};
        g.lambda = {1.0};
        const CvScoring scoring{0.05};
        const auto r = grid_search(train, g, 3, {}, scoring);
        const auto folds = kfold_splits(train, 3);
        for (const auto &row : r.table) {
            double sum = 0.0;
            for (std::size_t f = 0; f < folds.size(); ++f) {
                const auto fit = fold_fit_portion(train, folds[f]);
                const auto hold = train.select(folds[f].second);
                const auto model = train_respire(fit, row.hyper).model;
                const double score = robust_r2(hold.y, as_predictor(model)(hold), 0.05);
                CHECK(row.fold_r2[f] == doctest::Approx(score).epsilon(1e-9));
                sum += score;
            }
            CHECK(row.mean_r2 == doctest::Approx(sum / 3.0).epsilon(1e-9));
        }
    }

    TEST_CASE("ties go to the first cell in search order") {
        HyperGrid g;
        g.alpha = {0.0};  // eta has no effect without corruption, so both cells score identically
        g.q_ls = {0.5};
        g.eta = {0.4, 1.0};
        g.lambda = {1.0};
        const auto r = grid_search(calibration(4, 90), g, 3);
        CHECK(r.table[0].mean_r2 == r.table[1].mean_r2);
        CHECK(r.best.eta == 0.4);
    }

    TEST_CASE("deterministic, with a complete CV table") {
        HyperGrid g;
        g.alpha = {0.0, 0.05};
        g.q_ls = {0.3, 0.7};
        g.eta = {1.0};
        g.lambda = {0.5, 5.0};
        const auto ds = calibration(5, 150, 0.05);
        const auto a = grid_search(ds, g, 3), b = grid_search(ds, g, 3);
        std::ostringstream ta, tb;
        write_cv_table(ta, a);
        write_cv_table(tb, b);
        CHECK(ta.str() == tb.str());
        std::istringstream lines(ta.str());
        std::string header;
        std::getline(lines, header);
        CHECK(header == "family,alpha,q_ls,eta,lambda,fold1_r2,fold2_r2,fold3_r2,mean_r2");
        int rows = 0;
        for (std::string line; std::getline(lines, line);) ++rows;
        CHECK(rows == 8);
    }

    TEST_CASE("every cell failing is an error") {
        auto ds = calibration(6, 60);
        ds.temp.setConstant(20.0);
        ds = ds.normalized_with(fit_norm_params(ds.temp));
        HyperGrid g;
        g.alpha = {0.0};
        g.eta = {1.0};
        g.lambda = {1.0};
        CHECK_THROWS_AS((void)grid_search(ds, g, 3), Error);
    }

    TEST_CASE("baseline tuning and method names") {
        const auto ds = calibration(7, 120);
        const auto rr = tune_ridge(ds, {0.1, 10.0});
        CHECK((rr.lambda == 0.1 || rr.lambda == 10.0));
        const auto krr = tune_kernel_ridge(ds, {0.25, 0.75}, {0.1, 1.0});
        CHECK(std::isfinite(krr.score));
        for (auto m : {Method::Respire, Method::RR, Method::KRR}) CHECK(parse_method(method_name(m)) == m);
        CHECK_FALSE(parse_method("GBDT"));
    }

    // Stochastic check over a fixed set of 20 generator seeds, using the full default grid.
    TEST_CASE("alpha selection follows the planted outlier level") {
        for (double frac : {0.0, 0.1}) {
            int hits = 0;
            for (std::uint64_t seed = 100; seed < 120; ++seed) {
                const auto ds = calibration(seed, 300, frac, 1.0);
                const auto r = grid_search(ds, HyperGrid{}, 3);
                hits += frac == 0.0 ? r.best.alpha <= 0.05 : r.best.alpha >= 0.05;
            }
            MESSAGE("outlier fraction " << frac << ": " << hits << "/20 seeds selected the expected alpha");
            CHECK(hits >= 16);
        }
    }
}
