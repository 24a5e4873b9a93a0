#include "respire/tuning.hpp"

#include "respire/evaluation.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <tuple>

namespace respire {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename T>
void require_nonempty(const std::vector<T> &v, const char *name) {
    if (v.empty()) throw Error(std::string("hyperparameter set '") + name + "' is empty");
}

double holdout_score(const AlignedDataset &holdout, const VectorXd &pred, const CvScoring &scoring) {
    try {
        const double v = robust_r2(holdout.y, pred, scoring.holdout_delta);
        return std::isfinite(v) ? v : kNaN;
    } catch (const Error &) {
        return kNaN;
    }
}

double mean_or_nan(const std::vector<double> &v) {
    double s = 0.0;
    for (double x : v) {
        if (std::isnan(x)) return kNaN;
        s += x;
    }
    return s / static_cast<double>(v.size());
}

}  // namespace

std::size_t HyperGrid::size() const {
    return families.size() * alpha.size() * q_ls.size() * eta.size() * lambda.size();
}

void HyperGrid::validate() const {
    require_nonempty(alpha, "alpha");
    require_nonempty(q_ls, "q_ls");
    require_nonempty(eta, "eta");
    require_nonempty(lambda, "lambda");
    require_nonempty(families, "families");
    for (double a : alpha)
        if (!(a >= 0.0 && a <= 0.5)) throw Error("grid alpha values must lie in [0, 0.5]");
    for (double q : q_ls)
        if (!(q > 0.0 && q < 1.0)) throw Error("grid q_ls values must lie in (0, 1)");
    for (double e : eta)
        if (!(e > 0.0 && e <= 1.0)) throw Error("grid eta values must lie in (0, 1]");
    for (double l : lambda)
        if (!(l > 0.0)) throw Error("grid lambda values must be positive");
}

std::vector<RespireHyper> HyperGrid::cells() const {
    std::vector<RespireHyper> out;
    out.reserve(size());
    for (auto f : families)
        for (double a : alpha)
            for (double q : q_ls)
                for (double e : eta)
                    for (double l : lambda) out.push_back({f, q, a, e, l});
    return out;
}

std::vector<FoldSplit> kfold_splits(Index n, int k) {
    if (k < 2) throw Error("k-fold CV needs k >= 2");
    if (n < k) throw Error("k-fold CV needs at least k points");
    std::vector<FoldSplit> folds;
    const Index base = n / k, extra = n % k;
    Index start = 0;
    for (int f = 0; f < k; ++f) {
        const Index len = base + (f < extra ? 1 : 0);
        FoldSplit split;
        for (Index i = 0; i < n; ++i) (i >= start && i < start + len ? split.second : split.first).push_back(i);
        folds.push_back(std::move(split));
        start += len;
    }
    return folds;
}

std::vector<FoldSplit> kfold_splits(const AlignedDataset &train, int k) { return kfold_splits(train.size(), k); }

AlignedDataset fold_fit_portion(const AlignedDataset &train, const FoldSplit &fold) {
    const AlignedDataset fit = train.select(fold.first);
    return fit.normalized_with(fit_norm_params(fit.temp));
}

TuneResult grid_search(const AlignedDataset &train, const HyperGrid &grid, int k, const RobustLimits &limits,
                       const CvScoring &scoring) {
    grid.validate();
    if (!(scoring.holdout_delta >= 0.0 && scoring.holdout_delta < 1.0)) throw Error("holdout delta must lie in [0, 1)");
    const auto folds = kfold_splits(train, k);
    const auto cells = grid.cells();
    std::vector<CvRow> table(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        table[c].hyper = cells[c];
        table[c].fold_r2.assign(folds.size(), kNaN);
    }

    // Cell index lookup, so fold work can be organized around shared factorizations.
    const std::size_t na = grid.alpha.size(), nq = grid.q_ls.size(), ne = grid.eta.size(), nl = grid.lambda.size();
    auto cell_index = [&](std::size_t f, std::size_t a, std::size_t q, std::size_t e, std::size_t l) {
        return (((f * na + a) * nq + q) * ne + e) * nl + l;
    };

    for (std::size_t fi = 0; fi < folds.size(); ++fi) {
        const AlignedDataset fit = fold_fit_portion(train, folds[fi]);
        const AlignedDataset holdout = train.select(folds[fi].second);
        const MatrixXd hold_ops = holdout.ops();
        FitProblem<double> problem;
        std::vector<double> scales;
        try {
            problem = make_problem(fit, fit_input_scaling(fit.ops()));
            scales = lengthscale_candidates<double>(fit.z, grid.q_ls);
        } catch (const Error &) {
            continue;  // the whole fold is degenerate; every cell keeps NaN here
        }
        for (std::size_t f = 0; f < grid.families.size(); ++f)
            for (std::size_t q = 0; q < nq; ++q)
                for (std::size_t l = 0; l < nl; ++l) {
                    std::optional<SprSolver<double>> solver;
                    try {
                        solver.emplace(problem, KernelSpec<double>(grid.families[f], scales[q]), grid.lambda[l]);
                    } catch (const Error &) {
                        continue;
                    }
                    for (std::size_t a = 0; a < na; ++a)
                        for (std::size_t e = 0; e < ne; ++e) {
                            RobustConfig<double> cfg;
                            cfg.alpha = grid.alpha[a];
                            cfg.eta = grid.eta[e];
                            cfg.lambda = grid.lambda[l];
                            cfg.max_iters = limits.max_iters;
                            cfg.tol = limits.tol;
                            const auto fitres = fit_respire(*solver, problem.y, cfg);
                            table[cell_index(f, a, q, e, l)].fold_r2[fi] =
                                holdout_score(holdout, predict(fitres.model, hold_ops, holdout.temp), scoring);
                        }
                }
    }

    TuneResult result;
    bool found = false;
    for (auto &row : table) {
        row.mean_r2 = mean_or_nan(row.fold_r2);
        if (!std::isnan(row.mean_r2) && (!found || row.mean_r2 > result.best_score)) {
            result.best = row.hyper;
            result.best_score = row.mean_r2;
            found = true;
        }
    }
    if (!found) throw Error("grid search failed: every cell failed on at least one fold");
    result.table = std::move(table);
    return result;
}

void write_cv_table(std::ostream &out, const TuneResult &result) {
    out << "family,alpha,q_ls,eta,lambda";
    const std::size_t nf = result.table.empty() ? 0 : result.table.front().fold_r2.size();
    for (std::size_t f = 0; f < nf; ++f) out << ",fold" << f + 1 << "_r2";
    out << ",mean_r2\n";
    for (const auto &row : result.table) {
        const auto &h = row.hyper;
        out << to_string(h.family) << ',' << format_double(h.alpha) << ',' << format_double(h.q_ls) << ','
            << format_double(h.eta) << ',' << format_double(h.lambda);
        for (double v : row.fold_r2) out << ',' << format_double(v);
        out << ',' << format_double(row.mean_r2) << '\n';
    }
}

namespace {

template <typename FitFn>
double cv_score(const AlignedDataset &train, const std::vector<FoldSplit> &folds, const CvScoring &scoring,
                FitFn &&fit_and_predict) {
    std::vector<double> scores;
    for (const auto &fold : folds) {
        const AlignedDataset holdout = train.select(fold.second);
        try {
            scores.push_back(holdout_score(holdout, fit_and_predict(fold_fit_portion(train, fold), holdout), scoring));
        } catch (const Error &) {
            scores.push_back(kNaN);
        }
    }
    return mean_or_nan(scores);
}

}  // namespace

ScalarChoice tune_ridge(const AlignedDataset &train, const std::vector<double> &lambdas, int k,
                        const CvScoring &scoring) {
    require_nonempty(lambdas, "rr.lambda");
    const auto folds = kfold_splits(train, k);
    std::optional<ScalarChoice> best;
    for (double l : lambdas) {
        const double s = cv_score(train, folds, scoring, [&](const AlignedDataset &fit, const AlignedDataset &hold) {
            return fit_ridge(fit, l).predict(hold.ops(), hold.temp);
        });
        if (!std::isnan(s) && (!best || s > best->score)) best = ScalarChoice{l, 0.0, s};
    }
    if (!best) throw Error("ridge tuning failed on every lambda");
    return *best;
}

ScalarChoice tune_kernel_ridge(const AlignedDataset &train, const std::vector<double> &q_ls,
                               const std::vector<double> &lambdas, int k, const CvScoring &scoring) {
    require_nonempty(q_ls, "krr.q_ls");
    require_nonempty(lambdas, "krr.lambda");
    const auto folds = kfold_splits(train, k);
    std::optional<ScalarChoice> best;
    for (double q : q_ls)
        for (double l : lambdas) {
            const double s = cv_score(train, folds, scoring, [&](const AlignedDataset &fit, const AlignedDataset &hold) {
                return fit_kernel_ridge(fit, q, l).predict(hold.ops(), hold.temp);
            });
            if (!std::isnan(s) && (!best || s > best->score)) best = ScalarChoice{l, q, s};
        }
    if (!best) throw Error("kernel ridge tuning failed on every cell");
    return *best;
}

std::string_view method_name(Method m) {
    switch (m) {
        case Method::Respire: return "RESPIRE";
        case Method::RR: return "RR";
        case Method::KRR: return "KRR";
    }
    return "RESPIRE";
}

std::optional<Method> parse_method(std::string_view s) {
    for (auto m : {Method::Respire, Method::RR, Method::KRR})
        if (s == method_name(m)) return m;
    return std::nullopt;
}

std::string describe(const RespireHyper &h) {
    return "family=" + std::string(to_string(h.family)) + " alpha=" + format_double(h.alpha) +
           " q_ls=" + format_double(h.q_ls) + " eta=" + format_double(h.eta) + " lambda=" + format_double(h.lambda);
}

TrainedMethod train_method(Method m, const AlignedDataset &train, const MethodSettings &settings) {
    TrainedMethod out;
    out.method = m;
    switch (m) {
        case Method::Respire: {
            const auto tuned = grid_search(train, settings.grid, settings.folds, settings.limits, settings.scoring);
            auto fit = train_respire(train, tuned.best, settings.limits.max_iters, settings.limits.tol);
            out.predict = as_predictor(fit.model);
            out.hyper_summary = describe(tuned.best);
            out.respire = std::move(fit);
            break;
        }
        case Method::RR: {
            const auto choice = tune_ridge(train, settings.baselines.rr_lambda, settings.folds, settings.scoring);
            out.predict = Predictor([model = fit_ridge(train, choice.lambda)](const MatrixXd &ops, const VectorXd &t) {
                return model.predict(ops, t);
            });
            out.hyper_summary = "lambda=" + format_double(choice.lambda);
            break;
        }
        case Method::KRR: {
            const auto choice = tune_kernel_ridge(train, settings.baselines.krr_q_ls, settings.baselines.krr_lambda,
                                                  settings.folds, settings.scoring);
            out.predict = Predictor(
                [model = fit_kernel_ridge(train, choice.q_ls, choice.lambda)](const MatrixXd &ops, const VectorXd &t) {
                    return model.predict(ops, t);
                });
            out.hyper_summary = "q_ls=" + format_double(choice.q_ls) + " lambda=" + format_double(choice.lambda);
            break;
        }
    }
    return out;
}

}  // namespace respire
