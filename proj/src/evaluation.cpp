#include "respire/evaluation.hpp"

#include "respire/dataio.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace respire {

double r2(const VectorXd &y, const VectorXd &yhat) {
    if (y.size() != yhat.size()) throw Error("r2: length mismatch");
    if (y.size() < 2) throw Error("r2: need at least two points");
    const double ss_tot = (y.array() - y.mean()).square().sum();
    if (!(ss_tot > 0.0)) throw Error("r2: target has zero variance");
    return 1.0 - (y - yhat).squaredNorm() / ss_tot;
}

double robust_r2(const VectorXd &y, const VectorXd &yhat, double delta) {
    if (y.size() != yhat.size()) throw Error("robust_r2: length mismatch");
    if (!(delta >= 0.0 && delta < 1.0)) throw Error("robust_r2: delta must lie in [0, 1)");
    const Index n = y.size();
    const auto drop = static_cast<Index>(std::ceil(delta * static_cast<double>(n) - 1e-9));
    if (n - drop < 2) throw Error("robust_r2: fewer than two points remain");
    const VectorXd resid = y - yhat;
    std::vector<bool> removed(static_cast<std::size_t>(n), false);
    for (Index i : top_magnitude_indices<double>(resid, drop)) removed[static_cast<std::size_t>(i)] = true;
    VectorXd ky(n - drop), kh(n - drop);
    for (Index i = 0, j = 0; i < n; ++i)
        if (!removed[static_cast<std::size_t>(i)]) {
            ky(j) = y(i);
            kh(j) = yhat(i);
            ++j;
        }
    return r2(ky, kh);
}

std::map<std::string, int> win_counts(const ScoreTable &scores, double epsilon) {
    if (!(epsilon >= 0.0)) throw Error("win_counts: epsilon must be non-negative");
    std::map<std::string, int> wins;
    std::map<std::string, double> best;
    for (const auto &[method, row] : scores) {
        wins[method] = 0;
        for (const auto &[exp, v] : row) {
            if (std::isnan(v)) continue;
            auto it = best.find(exp);
            if (it == best.end() || v > it->second) best[exp] = v;
        }
    }
    for (const auto &[method, row] : scores)
        for (const auto &[exp, v] : row)
            if (!std::isnan(v) && v >= best.at(exp) - epsilon) ++wins[method];
    return wins;
}

double smoothness_index(const VectorXd &c) {
    if (c.size() < 2) throw Error("smoothness_index: need at least two samples");
    const double hi = c.maxCoeff(), lo = c.minCoeff();
    if (hi - lo < 1e-12 * (1.0 + std::abs(hi))) return 1.0;
    const double tv = (c.tail(c.size() - 1) - c.head(c.size() - 1)).cwiseAbs().sum();
    return tv / (hi - lo);
}

double OverfitReport::max_index() const { return std::max({w1_index, w2_index, bias_index}); }

VectorXd training_z_grid(const SemiParamModel<double> &model, Index points) {
    if (points < 2) throw Error("diagnostic grid needs at least two points");
    if (model.size() == 0) throw Error("model has no training points");
    const double lo = model.z_norm.invert(model.z_train.minCoeff());
    const double hi = model.z_norm.invert(model.z_train.maxCoeff());
    return VectorXd::LinSpaced(points, lo, hi);
}

OverfitReport overfit_flag(const WeightCurves<double> &curves, double tau) {
    OverfitReport r;
    r.w1_index = smoothness_index(curves.weights.col(0));
    r.w2_index = curves.weights.cols() > 1 ? smoothness_index(curves.weights.col(1)) : 1.0;
    r.bias_index = smoothness_index(curves.bias);
    r.flagged = r.max_index() > tau;
    return r;
}

OverfitReport overfit_flag(const SemiParamModel<double> &model, double tau, Index points) {
    return overfit_flag(weight_curves(model, training_z_grid(model, points)), tau);
}

TTestResult paired_ttest(const VectorXd &a, const VectorXd &b) {
    if (a.size() != b.size()) throw Error("paired_ttest: length mismatch");
    const Index n = a.size();
    if (n < 2) throw Error("paired_ttest: need at least two pairs");
    const VectorXd d = a - b;
    const double mean = d.mean();
    const double var = (d.array() - mean).square().sum() / static_cast<double>(n - 1);
    if (d.isZero(0.0)) return {0.0, 1.0};
    if (var == 0.0) return {mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity(), 0.0};
    const double t = mean / std::sqrt(var / static_cast<double>(n));
    const boost::math::students_t dist(static_cast<double>(n - 1));
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return {t, std::min(1.0, p)};
}

double EvalReport::robust_at(double delta) const {
    for (const auto &[d, v] : robust_curve)
        if (d == delta) return v;
    return std::numeric_limits<double>::quiet_NaN();
}

const std::vector<double> &default_robust_deltas() {
    static const std::vector<double> deltas{0.0, 0.01, 0.02, 0.05, 0.1, 0.2};
    return deltas;
}

EvalReport evaluate(std::string method_id, std::string dataset_id, const VectorXd &y, const VectorXd &yhat,
                    const std::vector<double> &deltas) {
    for (std::size_t i = 1; i < deltas.size(); ++i)
        if (!(deltas[i - 1] < deltas[i])) throw Error("robust deltas must be strictly increasing");
    EvalReport rep;
    rep.method_id = std::move(method_id);
    rep.dataset_id = std::move(dataset_id);
    rep.r2 = r2(y, yhat);
    rep.residuals = y - yhat;
    rep.n = y.size();
    for (double d : deltas) rep.robust_curve.emplace_back(d, robust_r2(y, yhat, d));
    return rep;
}

void write_robust_curve_csv(std::ostream &out, const EvalReport &report) {
    out << "delta,r2\n";
    for (const auto &[d, v] : report.robust_curve) out << format_double(d) << ',' << format_double(v) << '\n';
}

void write_summary(std::ostream &out, const EvalReport &report) {
    out << "method:  " << report.method_id << '\n'
        << "dataset: " << report.dataset_id << '\n'
        << "n:       " << report.n << '\n'
        << "r2:      " << format_double(report.r2) << '\n';
    for (const auto &[d, v] : report.robust_curve)
        out << "  robust r2 @ " << format_double(d) << ": " << format_double(v) << '\n';
}

}  // namespace respire
