#pragma once

// Semi-parametric regression y ~ sum_j w_j(z) x_j + b(z), solved in the dual.
//
// With G the Gram matrix over the (normalized) auxiliary values and X_j = diag(x_j),
// the system matrix is M = G + sum_j X_j G X_j = G .* (1 + X X^T). The dual minimizer
// satisfies (M + lambda I) beta = lambda y and the predictor coefficients are
// m_j = X_j beta / lambda, o = beta / lambda. Train predictions are M o.

#include "respire/kernels.hpp"
#include "respire/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace respire {

template <typename Scalar>
struct FitProblem {
    Matrix<Scalar> covariates;  // N x d, column j holds the diagonal of X_j (already scaled)
    Vector<Scalar> z;           // normalized auxiliary values
    Vector<Scalar> y;
    NormParams<Scalar> z_norm;  // how z was normalized from raw values
    InputScaling<Scalar> input_scaling;

    static FitProblem from_columns(const Vector<Scalar> &x1, const Vector<Scalar> &x2,
                                   const Vector<Scalar> &z, const Vector<Scalar> &y) {
        FitProblem p;
        p.covariates.resize(x1.size(), 2);
        p.covariates.col(0) = x1;
        p.covariates.col(1) = x2;
        p.z = z;
        p.y = y;
        return p;
    }

    [[nodiscard]] Index size() const { return y.size(); }
    [[nodiscard]] Index dims() const { return covariates.cols(); }

    void validate() const {
        const Index n = y.size();
        if (n < 1) throw EmptyDatasetError("fit problem has no records");
        if (covariates.rows() != n || z.size() != n)
            throw Error("fit problem vectors have inconsistent lengths");
        if (!covariates.allFinite() || !z.allFinite() || !y.allFinite())
            throw NumericError("fit problem contains non-finite values");
    }
};

template <typename Scalar>
struct SemiParamModel {
    KernelSpec<Scalar> spec;
    Scalar lambda = Scalar(1);
    Vector<Scalar> z_train;   // normalized training auxiliary values
    Matrix<Scalar> weights;   // N x d; column j holds the coefficient vector for x_j (m, n, ...)
    Vector<Scalar> bias;      // o
    NormParams<Scalar> z_norm;
    InputScaling<Scalar> input_scaling;

    [[nodiscard]] Index size() const { return bias.size(); }
    [[nodiscard]] Index dims() const { return weights.cols(); }

    [[nodiscard]] auto m() const { return weights.col(0); }
    [[nodiscard]] auto n() const { return weights.col(1); }
    [[nodiscard]] const Vector<Scalar> &o() const { return bias; }
    /// Dual variable, recovered as lambda * o.
    [[nodiscard]] Vector<Scalar> beta() const { return lambda * bias; }

    /// Number of training points with a nonzero coefficient.
    [[nodiscard]] Index support_size() const {
        Index s = 0;
        for (Index i = 0; i < size(); ++i)
            if (bias(i) != Scalar(0) || (weights.row(i).array() != Scalar(0)).any()) ++s;
        return s;
    }
};

/// M = G .* (1 + X X^T).
template <typename Scalar>
[[nodiscard]] Matrix<Scalar> system_matrix(const FitProblem<Scalar> &p, const KernelSpec<Scalar> &spec) {
    Matrix<Scalar> m = gram(spec, p.z);
    const Matrix<Scalar> outer = p.covariates * p.covariates.transpose();
    m.array() *= (outer.array() + Scalar(1));
    return m;
}

/// Factorizes M + lambda I once and solves for any number of target vectors.
template <typename Scalar>
class SprSolver {
public:
    SprSolver(FitProblem<Scalar> problem, KernelSpec<Scalar> spec, Scalar lambda)
        : problem_(std::move(problem)), spec_(spec), lambda_(lambda) {
        if (!(lambda_ > Scalar(0))) throw Error("regularization lambda must be positive");
        problem_.validate();
        system_ = system_matrix(problem_, spec_);
        Matrix<Scalar> shifted = system_;
        shifted.diagonal().array() += lambda_;
        llt_.compute(shifted);
        if (llt_.info() != Eigen::Success) throw NumericError("Cholesky factorization of M + lambda I failed");
    }

    [[nodiscard]] const FitProblem<Scalar> &problem() const { return problem_; }
    [[nodiscard]] const Matrix<Scalar> &system() const { return system_; }
    [[nodiscard]] const KernelSpec<Scalar> &spec() const { return spec_; }
    [[nodiscard]] Scalar lambda() const { return lambda_; }

    /// Dual solution beta of (M + lambda I) beta = lambda * targets.
    [[nodiscard]] Vector<Scalar> solve_dual(const Vector<Scalar> &targets) const {
        return llt_.solve(lambda_ * targets);
    }

    [[nodiscard]] SemiParamModel<Scalar> fit(const Vector<Scalar> &targets) const {
        if (targets.size() != problem_.size()) throw Error("target length does not match the fit problem");
        return model_from_beta(solve_dual(targets));
    }

    [[nodiscard]] SemiParamModel<Scalar> model_from_beta(const Vector<Scalar> &beta) const {
        SemiParamModel<Scalar> model;
        model.spec = spec_;
        model.lambda = lambda_;
        model.z_train = problem_.z;
        model.z_norm = problem_.z_norm;
        model.input_scaling = problem_.input_scaling;
        model.bias = beta / lambda_;
        model.weights = problem_.covariates.array().colwise() * model.bias.array();
        return model;
    }

    /// X_1 G m + X_2 G n + G o, which equals M o for a model built by this solver.
    [[nodiscard]] Vector<Scalar> train_predictions(const SemiParamModel<Scalar> &model) const {
        return system_ * model.bias;
    }

private:
    FitProblem<Scalar> problem_;
    KernelSpec<Scalar> spec_;
    Scalar lambda_;
    Matrix<Scalar> system_;
    Eigen::LLT<Matrix<Scalar>> llt_;
};

template <typename Scalar>
[[nodiscard]] SemiParamModel<Scalar> fit_spr(const FitProblem<Scalar> &p, const KernelSpec<Scalar> &spec,
                                             Scalar lambda) {
    return SprSolver<Scalar>(p, spec, lambda).fit(p.y);
}

/// beta^T M beta + lambda ||beta||^2 - 2 lambda beta^T y.
template <typename Scalar>
[[nodiscard]] Scalar dual_objective(const FitProblem<Scalar> &p, const KernelSpec<Scalar> &spec, Scalar lambda,
                                    const Vector<Scalar> &beta) {
    if (beta.size() != p.size()) throw Error("beta length does not match the fit problem");
    const Matrix<Scalar> m = system_matrix(p, spec);
    return beta.dot(m * beta) + lambda * beta.squaredNorm() - Scalar(2) * lambda * beta.dot(p.y);
}

/// Predictions for raw inputs: rows of `x_raw` are independent-variable tuples, `z_raw` the
/// unnormalized auxiliary values. Normalization and input scaling come from the model.
template <typename Scalar>
[[nodiscard]] Vector<Scalar> predict(const SemiParamModel<Scalar> &model, const Matrix<Scalar> &x_raw,
                                     const Vector<Scalar> &z_raw) {
    if (x_raw.cols() != model.dims()) throw Error("input dimension does not match the model");
    if (x_raw.rows() != z_raw.size()) throw Error("inputs have inconsistent lengths");
    Vector<Scalar> zn(z_raw.size());
    for (Index i = 0; i < z_raw.size(); ++i) zn(i) = model.z_norm.apply(z_raw(i));
    const Matrix<Scalar> k = cross_gram(model.spec, zn, model.z_train);
    const Matrix<Scalar> w = k * model.weights;  // n x d
    Vector<Scalar> out = k * model.bias;
    for (Index j = 0; j < model.dims(); ++j)
        for (Index i = 0; i < out.size(); ++i) out(i) += w(i, j) * model.input_scaling.apply(j, x_raw(i, j));
    return out;
}

template <typename Scalar>
[[nodiscard]] Scalar predict(const SemiParamModel<Scalar> &model, Scalar x1, Scalar x2, Scalar z_raw) {
    const Vector<Scalar> k = cross_kernel(model.spec, model.z_norm.apply(z_raw), model.z_train);
    const Scalar xs[2] = {model.input_scaling.apply(0, x1), model.input_scaling.apply(1, x2)};
    Scalar y = k.dot(model.bias);
    for (Index j = 0; j < std::min<Index>(2, model.dims()); ++j) y += k.dot(model.weights.col(j)) * xs[j];
    return y;
}

/// Weight curves w_j(z) and bias b(z) expressed in raw input units, so that
/// predict(x, z) = sum_j w_j(z) x_j + b(z) at every grid point.
template <typename Scalar>
struct WeightCurves {
    Vector<Scalar> z;        // raw grid
    Matrix<Scalar> weights;  // grid x d
    Vector<Scalar> bias;
};

template <typename Scalar>
[[nodiscard]] WeightCurves<Scalar> weight_curves(const SemiParamModel<Scalar> &model, const Vector<Scalar> &z_grid) {
    if (z_grid.size() == 0) throw Error("weight curve grid is empty");
    Vector<Scalar> zn(z_grid.size());
    for (Index i = 0; i < z_grid.size(); ++i) zn(i) = model.z_norm.apply(z_grid(i));
    const Matrix<Scalar> k = cross_gram(model.spec, zn, model.z_train);
    WeightCurves<Scalar> out{z_grid, k * model.weights, k * model.bias};
    if (!model.input_scaling.is_identity()) {
        for (Index j = 0; j < model.dims(); ++j) {
            const Scalar s = model.input_scaling.scale(j);
            const Scalar mu = model.input_scaling.offset(j);
            out.bias -= out.weights.col(j) * (mu / s);
            out.weights.col(j) /= s;
        }
    }
    return out;
}

/// Indices of the `count` largest |v_i|, ordered by decreasing magnitude; ties go to the lower index.
template <typename Scalar>
[[nodiscard]] std::vector<Index> top_magnitude_indices(const Vector<Scalar> &v, Index count) {
    std::vector<Index> idx(static_cast<std::size_t>(v.size()));
    std::iota(idx.begin(), idx.end(), Index(0));
    using std::abs;
    auto before = [&](Index a, Index b) {
        const Scalar ma = abs(v(a)), mb = abs(v(b));
        return ma > mb || (ma == mb && a < b);
    };
    const auto mid = idx.begin() + static_cast<std::ptrdiff_t>(count);
    std::partial_sort(idx.begin(), mid, idx.end(), before);
    idx.resize(static_cast<std::size_t>(count));
    return idx;
}

/// Keeps the n_keep coordinates of beta with the largest magnitude and refits them.
///
/// The refit minimizes ||y - M[:,S] g||^2 + lambda g^T M[S,S] g + rho ||g||^2 over g = o_S,
/// i.e. the original regularized objective restricted to the support, plus a tiny ridge
/// rho = 1e-8 tr(M) / N for conditioning. With S = all indices this reproduces the
/// uncompressed model up to the rho perturbation. p.y must hold the targets the model was fit on
/// (for a robust fit, the corrected targets y - eta * c).
template <typename Scalar>
[[nodiscard]] SemiParamModel<Scalar> compress(const SemiParamModel<Scalar> &model, const FitProblem<Scalar> &p,
                                              Index n_keep) {
    const Index n = model.size();
    if (n_keep < 1 || n_keep > n) throw Error("n_keep must lie in [1, N]");
    if (p.size() != n) throw Error("fit problem does not match the model");

    std::vector<Index> support = top_magnitude_indices<Scalar>(model.beta(), n_keep);
    std::sort(support.begin(), support.end());

    const Matrix<Scalar> m = system_matrix(p, model.spec);
    const Index k = n_keep;
    Matrix<Scalar> cols(n, k), block(k, k);
    for (Index a = 0; a < k; ++a) {
        cols.col(a) = m.col(support[static_cast<std::size_t>(a)]);
        for (Index b = 0; b < k; ++b)
            block(a, b) = m(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
    }

    // Square root of the PSD block via its eigendecomposition; tiny negative eigenvalues are rounding.
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(block);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of the support block failed");
    const Vector<Scalar> root = eig.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
    const Matrix<Scalar> penalty = root.asDiagonal() * eig.eigenvectors().transpose();

    using std::sqrt;
    const Scalar rho = Scalar(1e-8) * m.trace() / static_cast<Scalar>(n);
    Matrix<Scalar> stacked = Matrix<Scalar>::Zero(n + 2 * k, k);
    stacked.topRows(n) = cols;
    stacked.middleRows(n, k) = sqrt(model.lambda) * penalty;
    stacked.bottomRows(k).diagonal().setConstant(sqrt(rho));
    Vector<Scalar> rhs = Vector<Scalar>::Zero(n + 2 * k);
    rhs.head(n) = p.y;

    const Vector<Scalar> gamma = stacked.colPivHouseholderQr().solve(rhs);

    SemiParamModel<Scalar> out = model;
    out.bias.setZero();
    for (Index a = 0; a < k; ++a) out.bias(support[static_cast<std::size_t>(a)]) = gamma(a);
    out.weights = p.covariates.array().colwise() * out.bias.array();
    return out;
}

}  // namespace respire
