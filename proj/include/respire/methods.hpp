#pragma once

// Calibration methods on aligned datasets: the robust semi-parametric pipeline and the two
// ridge baselines. Every method consumes raw (op1, op2, temp) rows at prediction time.

#include "respire/dataio.hpp"
#include "respire/robust.hpp"

#include <functional>
#include <string>
#include <string_view>

namespace respire {

/// Maps raw rows (N x 2 operating potentials, N raw temperatures) to predictions.
class Predictor {
public:
    using Fn = std::function<VectorXd(const MatrixXd &ops, const VectorXd &temp)>;

    Predictor() = default;
    explicit Predictor(Fn fn) : fn_(std::move(fn)) {}

    [[nodiscard]] VectorXd operator()(const MatrixXd &ops, const VectorXd &temp) const { return fn_(ops, temp); }
    [[nodiscard]] VectorXd operator()(const AlignedDataset &ds) const { return fn_(ds.ops(), ds.temp); }
    [[nodiscard]] explicit operator bool() const { return static_cast<bool>(fn_); }

private:
    Fn fn_;
};

struct RespireHyper {
    KernelFamily family = KernelFamily::Gaussian;
    double q_ls = 0.5;
    double alpha = 0.05;
    double eta = 1.0;
    double lambda = 1.0;
};

/// Column means and population standard deviations (zero spread maps to scale 1).
[[nodiscard]] InputScaling<double> fit_input_scaling(const MatrixXd &ops);

/// Fit problem over a (normalized) training dataset with standardized covariates.
[[nodiscard]] FitProblem<double> make_problem(const AlignedDataset &train, const InputScaling<double> &scaling);

/// Length scale at quantile q of the pairwise distances between training auxiliary values.
[[nodiscard]] double auxiliary_lengthscale(const VectorXd &z, double q);

/// Standardizes inputs, resolves the length scale and runs the robust loop.
[[nodiscard]] RobustFit<double> train_respire(const AlignedDataset &train, const RespireHyper &h,
                                              int max_iters = 50, double tol = 1e-6);

[[nodiscard]] Predictor as_predictor(SemiParamModel<double> model);

/// Linear ridge on standardized (x1, x2, temp) with an unpenalized intercept.
struct RidgeModel {
    VectorXd mean, scale, coef;
    double intercept = 0.0;

    [[nodiscard]] VectorXd predict(const MatrixXd &ops, const VectorXd &temp) const;
};

[[nodiscard]] RidgeModel fit_ridge(const AlignedDataset &train, double lambda);

/// Gaussian kernel ridge on standardized (x1, x2, temp); targets are centered before the solve.
struct KernelRidgeModel {
    VectorXd mean, scale;
    MatrixXd features;  // standardized training rows
    KernelSpec<double> spec;
    VectorXd dual;
    double y_mean = 0.0;

    [[nodiscard]] VectorXd predict(const MatrixXd &ops, const VectorXd &temp) const;
};

[[nodiscard]] KernelRidgeModel fit_kernel_ridge(const AlignedDataset &train, double q_ls, double lambda);

/// Raw (x1, x2, temp) rows as an N x 3 matrix.
[[nodiscard]] MatrixXd raw_features(const MatrixXd &ops, const VectorXd &temp);

}  // namespace respire
