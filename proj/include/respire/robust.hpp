#pragma once

// Outlier-resistant training: alternate an SPR fit on corrected targets y - eta * c with a
// hard-thresholding re-estimate c = HT(y - yhat, k) of the sparse corruption.

#include "respire/spr.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace respire {

/// Keeps the k largest-magnitude coordinates of r (ties to the lower index), zeroes the rest.
template <typename Scalar>
[[nodiscard]] Vector<Scalar> hard_threshold(const Vector<Scalar> &r, Index k) {
    if (k < 0 || k > r.size()) throw Error("hard_threshold: k must lie in [0, N]");
    Vector<Scalar> out = Vector<Scalar>::Zero(r.size());
    for (Index i : top_magnitude_indices(r, k)) out(i) = r(i);
    return out;
}

template <typename Scalar>
struct RobustConfig {
    Scalar alpha = Scalar(0);   // anticipated corruption fraction
    Scalar eta = Scalar(1);     // outlier correction rate
    Scalar lambda = Scalar(1);
    int max_iters = 50;
    Scalar tol = Scalar(1e-6);  // on ||c_t - c_{t-1}|| relative to ||y||

    void validate() const {
        if (!(alpha >= Scalar(0) && alpha <= Scalar(0.5))) throw Error("alpha must lie in [0, 0.5]");
        if (!(eta > Scalar(0) && eta <= Scalar(1))) throw Error("eta must lie in (0, 1]");
        if (!(lambda > Scalar(0))) throw Error("lambda must be positive");
        if (max_iters < 1) throw Error("max_iters must be positive");
        if (!(tol > Scalar(0))) throw Error("tol must be positive");
    }
};

/// k = floor(alpha * N). The small slack absorbs representation error in alpha * N (e.g. 0.05 * 400).
template <typename Scalar>
[[nodiscard]] Index sparsity_budget(Scalar alpha, Index n) {
    using std::floor;
    return static_cast<Index>(floor(static_cast<double>(alpha) * static_cast<double>(n) + 1e-9));
}

template <typename Scalar>
struct RobustFit {
    SemiParamModel<Scalar> model;
    Vector<Scalar> corruption;
    std::vector<Scalar> trace;  // ||c_t - c_{t-1}|| per iteration
    int iterations = 0;
    bool converged = false;
    Scalar eta = Scalar(1);

    /// The targets the returned model was fit on.
    [[nodiscard]] Vector<Scalar> corrected_targets(const Vector<Scalar> &y) const { return y - eta * corruption; }
};

/// Called after each in-loop SPR step with the iteration number (1-based) and the model.
template <typename Scalar>
using RobustObserver = std::function<void(int, const SemiParamModel<Scalar> &)>;

template <typename Scalar>
[[nodiscard]] RobustFit<Scalar> fit_respire(const SprSolver<Scalar> &solver, const Vector<Scalar> &y,
                                            const RobustConfig<Scalar> &cfg,
                                            const RobustObserver<Scalar> &observer = {}) {
    cfg.validate();
    const Index n = y.size();
    const Index k = sparsity_budget(cfg.alpha, n);
    const Scalar threshold = cfg.tol * (y.norm() + Scalar(1e-12));

    RobustFit<Scalar> fit;
    fit.eta = cfg.eta;
    Vector<Scalar> c = Vector<Scalar>::Zero(n);
    for (int it = 1; it <= cfg.max_iters; ++it) {
        const SemiParamModel<Scalar> model = solver.fit(y - cfg.eta * c);
        const Vector<Scalar> yhat = solver.train_predictions(model);
        Vector<Scalar> next = hard_threshold<Scalar>(y - yhat, k);
        const Scalar delta = (next - c).norm();
        fit.trace.push_back(delta);
        c = std::move(next);
        fit.iterations = it;
        if (observer) observer(it, model);
        if (delta <= threshold) {
            fit.converged = true;
            break;
        }
    }
    fit.model = solver.fit(y - cfg.eta * c);
    fit.corruption = std::move(c);
    return fit;
}

template <typename Scalar>
[[nodiscard]] RobustFit<Scalar> fit_respire(const FitProblem<Scalar> &p, const KernelSpec<Scalar> &spec,
                                            const RobustConfig<Scalar> &cfg,
                                            const RobustObserver<Scalar> &observer = {}) {
    cfg.validate();
    const SprSolver<Scalar> solver(p, spec, cfg.lambda);
    return fit_respire(solver, p.y, cfg, observer);
}

}  // namespace respire
