#include "respire/methods.hpp"

#include <array>
#include <cmath>

namespace respire {

namespace {

void column_stats(const MatrixXd &x, VectorXd &mean, VectorXd &scale) {
    mean = x.colwise().mean().transpose();
    scale.resize(x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        const double sd = std::sqrt((x.col(j).array() - mean(j)).square().mean());
        scale(j) = sd > 0.0 ? sd : 1.0;
    }
}

MatrixXd standardize(const MatrixXd &x, const VectorXd &mean, const VectorXd &scale) {
    return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

}  // namespace

InputScaling<double> fit_input_scaling(const MatrixXd &ops) {
    if (ops.rows() < 1) throw EmptyDatasetError("cannot standardize an empty dataset");
    InputScaling<double> s;
    column_stats(ops, s.offset, s.scale);
    return s;
}

FitProblem<double> make_problem(const AlignedDataset &train, const InputScaling<double> &scaling) {
    FitProblem<double> p;
    p.covariates = scaling.is_identity() ? train.ops() : standardize(train.ops(), scaling.offset, scaling.scale);
    p.z = train.z;
    p.y = train.y;
    p.z_norm = train.norm;
    p.input_scaling = scaling;
    return p;
}

double auxiliary_lengthscale(const VectorXd &z, double q) {
    const std::array<double, 1> qs{q};
    return lengthscale_candidates<double>(z, qs).front();
}

RobustFit<double> train_respire(const AlignedDataset &train, const RespireHyper &h, int max_iters, double tol) {
    const FitProblem<double> p = make_problem(train, fit_input_scaling(train.ops()));
    const KernelSpec<double> spec(h.family, auxiliary_lengthscale(train.z, h.q_ls));
    RobustConfig<double> cfg;
    cfg.alpha = h.alpha;
    cfg.eta = h.eta;
    cfg.lambda = h.lambda;
    cfg.max_iters = max_iters;
    cfg.tol = tol;
    return fit_respire(p, spec, cfg);
}

Predictor as_predictor(SemiParamModel<double> model) {
    return Predictor([m = std::move(model)](const MatrixXd &ops, const VectorXd &temp) { return predict(m, ops, temp); });
}

MatrixXd raw_features(const MatrixXd &ops, const VectorXd &temp) {
    if (ops.rows() != temp.size() || ops.cols() != 2) throw Error("expected N x 2 inputs with N temperatures");
    MatrixXd f(ops.rows(), 3);
    f.leftCols(2) = ops;
    f.col(2) = temp;
    return f;
}

RidgeModel fit_ridge(const AlignedDataset &train, double lambda) {
    if (!(lambda > 0.0)) throw Error("ridge lambda must be positive");
    if (train.size() < 1) throw EmptyDatasetError("ridge fit on an empty dataset");
    RidgeModel m;
    const MatrixXd raw = raw_features(train.ops(), train.temp);
    column_stats(raw, m.mean, m.scale);
    const MatrixXd x = standardize(raw, m.mean, m.scale);
    // Standardized columns are centered, so the intercept decouples to mean(y).
    m.intercept = train.y.mean();
    MatrixXd a = x.transpose() * x;
    a.diagonal().array() += lambda;
    m.coef = a.ldlt().solve(x.transpose() * (train.y.array() - m.intercept).matrix());
    return m;
}

VectorXd RidgeModel::predict(const MatrixXd &ops, const VectorXd &temp) const {
    return (standardize(raw_features(ops, temp), mean, scale) * coef).array() + intercept;
}

KernelRidgeModel fit_kernel_ridge(const AlignedDataset &train, double q_ls, double lambda) {
    if (!(lambda > 0.0)) throw Error("kernel ridge lambda must be positive");
    KernelRidgeModel m;
    const MatrixXd raw = raw_features(train.ops(), train.temp);
    column_stats(raw, m.mean, m.scale);
    m.features = standardize(raw, m.mean, m.scale);
    const std::array<double, 1> qs{q_ls};
    m.spec = KernelSpec<double>(KernelFamily::Gaussian, lengthscale_candidates<double>(m.features, qs).front());
    const Index n = m.features.rows();
    MatrixXd k(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = j; i < n; ++i)
            k(i, j) = k(j, i) = kernel_from_distance(m.spec, (m.features.row(i) - m.features.row(j)).norm());
    k.diagonal().array() += lambda;
    m.y_mean = train.y.mean();
    Eigen::LLT<MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) throw NumericError("kernel ridge factorization failed");
    m.dual = llt.solve((train.y.array() - m.y_mean).matrix());
    return m;
}

VectorXd KernelRidgeModel::predict(const MatrixXd &ops, const VectorXd &temp) const {
    const MatrixXd q = standardize(raw_features(ops, temp), mean, scale);
    VectorXd out(q.rows());
    for (Index i = 0; i < q.rows(); ++i) {
        double s = 0.0;
        for (Index j = 0; j < features.rows(); ++j)
            s += kernel_from_distance(spec, (q.row(i) - features.row(j)).norm()) * dual(j);
        out(i) = s + y_mean;
    }
    return out;
}

}  // namespace respire
