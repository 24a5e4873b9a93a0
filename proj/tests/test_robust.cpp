#include "respire/evaluation.hpp"
#include "respire/methods.hpp"
#include "respire/robust.hpp"
#include "respire/synthlab.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace respire;

namespace {

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

Index nonzeros(const VectorXd &v) { return (v.array() != 0.0).count(); }

double rms(const VectorXd &v) { return std::sqrt(v.squaredNorm() / static_cast<double>(v.size())); }

}  // namespace

TEST_SUITE("robust") {
    TEST_CASE("hard threshold examples") {
        CHECK(hard_threshold<double>(vec({3, -5, 1}), 1) == vec({0, -5, 0}));
        CHECK(hard_threshold<double>(vec({3, -5, 1}), 3) == vec({3, -5, 1}));
        CHECK(hard_threshold<double>(vec({3, -5, 1}), 0) == vec({0, 0, 0}));
        CHECK(hard_threshold<double>(vec({2, -2}), 1) == vec({2, 0}));
        CHECK_THROWS_AS((void)hard_threshold<double>(vec({1, 2}), 3), Error);
        CHECK_THROWS_AS((void)hard_threshold<double>(vec({1, 2}), -1), Error);
    }

    TEST_CASE("hard threshold keeps exactly k entries of a distinct-magnitude vector") {
        std::mt19937_64 rng(3);
        const VectorXd r = oracle::normal(rng, 40);
        for (Index k = 0; k <= 40; ++k) {
            const VectorXd h = hard_threshold<double>(r, k);
            CHECK(nonzeros(h) == k);
            // Every kept magnitude dominates every dropped one.
            double min_kept = INFINITY, max_dropped = 0.0;
            for (Index i = 0; i < 40; ++i) {
                if (h(i) != 0.0) {
                    CHECK(h(i) == r(i));
                    min_kept = std::min(min_kept, std::abs(r(i)));
                } else {
                    max_dropped = std::max(max_dropped, std::abs(r(i)));
                }
            }
            if (k > 0 && k < 40) CHECK(min_kept > max_dropped);
        }
    }

    TEST_CASE("sparsity budget is floor(alpha N)") {
        CHECK(sparsity_budget(0.05, 400) == 20);
        CHECK(sparsity_budget(0.05, 399) == 19);
        CHECK(sparsity_budget(0.1, 30) == 3);
        CHECK(sparsity_budget(0.0, 1000) == 0);
        CHECK(sparsity_budget(0.5, 7) == 3);
    }

    TEST_CASE("config validation") {
        RobustConfig<double> c;
        c.alpha = 0.6;
        CHECK_THROWS_AS(c.validate(), Error);
        c.alpha = 0.1;
        c.eta = 0.0;
        CHECK_THROWS_AS(c.validate(), Error);
        c.eta = 1.0;
        c.lambda = 0.0;
        CHECK_THROWS_AS(c.validate(), Error);
    }

    TEST_CASE("alpha = 0 reproduces the plain fit bitwise") {
        std::mt19937_64 rng(8);
        const auto p = FitProblem<double>::from_columns(oracle::normal(rng, 25), oracle::normal(rng, 25),
                                                        oracle::uniform(rng, 25, 0, 1), oracle::normal(rng, 25));
        const KernelSpec<double> spec(KernelFamily::Gaussian, 0.2);
        RobustConfig<double> cfg;
        cfg.alpha = 0.0;
        cfg.lambda = 0.3;
        const auto fit = fit_respire(p, spec, cfg);
        const auto plain = fit_spr(p, spec, 0.3);
        CHECK(fit.iterations == 1);
        CHECK(fit.converged);
        CHECK(fit.trace.size() == 1);
        CHECK(fit.corruption.isZero(0.0));
        CHECK(fit.model.bias == plain.bias);
        CHECK(fit.model.weights == plain.weights);
    }

    TEST_CASE("planted corruption on a noiseless synthetic instance") {
        SynthSpec spec;
        spec.seed = 11;
        const auto inst = generate(spec);
        const SprSolver<double> solver(inst.problem, KernelSpec<double>(KernelFamily::Gaussian, spec.h),
                                       theorem_lambda(inst));
        RobustConfig<double> cfg;
        cfg.alpha = static_cast<double>(spec.k) / static_cast<double>(spec.n_points);
        cfg.lambda = solver.lambda();
        cfg.tol = 1e-12;
        const Index k = sparsity_budget(cfg.alpha, spec.n_points);
        REQUIRE(k == spec.k);

        int violations = 0;
        const auto fit = fit_respire<double>(solver, inst.problem.y, cfg,
                                             RobustObserver<double>([&](int, const SemiParamModel<double> &m) {
                                                 const VectorXd c = hard_threshold<double>(inst.problem.y - solver.train_predictions(m), k);
                                                 if (nonzeros(c) > k) ++violations;
                                             }));
        CHECK(violations == 0);
        CHECK(nonzeros(fit.corruption) <= k);
        CHECK(fit.trace.size() == static_cast<std::size_t>(fit.iterations));

        std::vector<Index> support;
        for (Index i = 0; i < fit.corruption.size(); ++i)
            if (fit.corruption(i) != 0.0) support.push_back(i);
        CHECK(support == inst.corruption_support);
        CHECK((fit.corruption - inst.corruption).norm() <= 1e-6 * inst.corruption.norm());
        const VectorXd yhat = solver.train_predictions(fit.model);
        CHECK((yhat - inst.y_clean).norm() <= 1e-6 * inst.y_clean.norm());

        // Geometric decay of the trace after the first two iterations, where the trace is long enough.
        int slow_steps = 0;
        for (std::size_t t = 2; t + 1 < fit.trace.size(); ++t)
            if (fit.trace[t] > 0.0 && fit.trace[t + 1] > 0.95 * fit.trace[t]) ++slow_steps;
        MESSAGE("trace length " << fit.trace.size() << ", steps slower than 0.95: " << slow_steps);
        CHECK(slow_steps == 0);
    }

    TEST_CASE("full-correction fixed point") {
        SynthSpec spec;
        spec.seed = 5;
        const auto inst = generate(spec);
        const SprSolver<double> solver(inst.problem, KernelSpec<double>(KernelFamily::Gaussian, spec.h),
                                       theorem_lambda(inst));
        const auto model = solver.fit(inst.problem.y - inst.corruption);
        const VectorXd next = hard_threshold<double>(inst.problem.y - solver.train_predictions(model), spec.k);
        for (Index i = 0; i < next.size(); ++i) CHECK((next(i) != 0.0) == (inst.corruption(i) != 0.0));
        CHECK((next - inst.corruption).norm() <= 1e-6 * inst.corruption.norm());
    }

    TEST_CASE("one gross outlier barely moves the robust fit") {
        CalibrationSpec cs;
        cs.n = 400;
        cs.seed = 2;
        const auto data = generate_calibration(cs);
        auto [train, test] = temporal_split(data.data, 0.8);
        auto bad = train;
        bad.y(37) += 100.0 * train.y.cwiseAbs().maxCoeff();

        RespireHyper h;
        h.alpha = 0.05;
        const auto robust_clean = as_predictor(train_respire(train, h).model)(test);
        const auto robust_bad = as_predictor(train_respire(bad, h).model)(test);
        h.alpha = 0.0;
        const auto plain_clean = as_predictor(train_respire(train, h).model)(test);
        const auto plain_bad = as_predictor(train_respire(bad, h).model)(test);

        const double robust_change = rms(robust_bad - robust_clean) / rms(robust_clean);
        const double plain_change = rms(plain_bad - plain_clean) / rms(plain_clean);
        MESSAGE("relative RMSE change: robust " << robust_change << ", plain " << plain_change);
        CHECK(robust_change <= 0.01);
        CHECK(plain_change > robust_change);
    }
}
