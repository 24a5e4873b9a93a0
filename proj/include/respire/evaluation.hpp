#pragma once

#include "respire/spr.hpp"
#include "respire/types.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace respire {

/// Coefficient of determination 1 - SS_res / SS_tot. Throws when y has zero variance.
[[nodiscard]] double r2(const VectorXd &y, const VectorXd &yhat);

/// R^2 after dropping the ceil(delta * n) points with the largest |y - yhat| (ties drop the lower
/// index first). The mean is recomputed on the retained points.
[[nodiscard]] double robust_r2(const VectorXd &y, const VectorXd &yhat, double delta);

/// scores[method][experiment]. NaN entries count as missing.
using ScoreTable = std::map<std::string, std::map<std::string, double>>;

/// Per experiment, every method within epsilon of the best score gets a win.
[[nodiscard]] std::map<std::string, int> win_counts(const ScoreTable &scores, double epsilon = 0.01);

/// Total variation over range; 1 for constant or monotone curves.
[[nodiscard]] double smoothness_index(const VectorXd &curve);

struct OverfitReport {
    bool flagged = false;
    double w1_index = 1.0;
    double w2_index = 1.0;
    double bias_index = 1.0;
    [[nodiscard]] double max_index() const;
};

/// Uniform grid of `points` raw auxiliary values spanning the model's training z range.
[[nodiscard]] VectorXd training_z_grid(const SemiParamModel<double> &model, Index points = 200);

[[nodiscard]] OverfitReport overfit_flag(const SemiParamModel<double> &model, double tau = 3.0, Index points = 200);
[[nodiscard]] OverfitReport overfit_flag(const WeightCurves<double> &curves, double tau = 3.0);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
};

/// Paired two-sided t-test on d = a - b with n - 1 degrees of freedom.
/// All-zero differences give (0, 1); zero spread with nonzero mean gives (+-inf, 0).
[[nodiscard]] TTestResult paired_ttest(const VectorXd &a, const VectorXd &b);

struct EvalReport {
    std::string method_id;
    std::string dataset_id;
    double r2 = 0.0;
    std::vector<std::pair<double, double>> robust_curve;  // (delta, r2)
    VectorXd residuals;
    Index n = 0;

    [[nodiscard]] double robust_at(double delta) const;
};

[[nodiscard]] const std::vector<double> &default_robust_deltas();

[[nodiscard]] EvalReport evaluate(std::string method_id, std::string dataset_id, const VectorXd &y,
                                  const VectorXd &yhat, const std::vector<double> &deltas = default_robust_deltas());

void write_robust_curve_csv(std::ostream &out, const EvalReport &report);
void write_summary(std::ostream &out, const EvalReport &report);

}  // namespace respire
