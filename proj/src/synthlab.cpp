#include "respire/synthlab.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace respire {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    return std::mt19937_64(seq);
}

void SynthSpec::validate() const {
    if (n_points < 1) throw Error("synthetic N must be positive");
    if (s < 1 || s > n_points) throw Error("s must lie in [1, N]");
    if (k < 0 || k > n_points) throw Error("k must lie in [0, N]");
    if (!(r > 0.0 && r <= R)) throw Error("covariate bounds need 0 < r <= R");
    if (!(h > 0.0)) throw Error("bandwidth h must be positive");
    if (!(noise_sigma >= 0.0)) throw Error("noise_sigma must be non-negative");
    if (!(corruption_scale > 0.0)) throw Error("corruption_scale must be positive");
}

SynthInstance generate(const SynthSpec &spec) {
    spec.validate();
    auto rng = make_rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0), cov(spec.r, spec.R);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Index n = spec.n_points;

    VectorXd z(n), x1(n), x2(n);
    for (Index i = 0; i < n; ++i) z(i) = unit(rng);
    for (Index i = 0; i < n; ++i) x1(i) = cov(rng);
    for (Index i = 0; i < n; ++i) x2(i) = cov(rng);

    SynthInstance inst;
    inst.problem = FitProblem<double>::from_columns(x1, x2, z, VectorXd::Zero(n));
    inst.F = system_matrix(inst.problem, KernelSpec<double>(KernelFamily::Gaussian, spec.h));

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(inst.F);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of F failed");
    inst.top_eigenvectors = eig.eigenvectors().rightCols(spec.s);  // eigenvalues ascend

    VectorXd mix(spec.s);
    for (Index j = 0; j < spec.s; ++j) mix(j) = gauss(rng);
    inst.beta_star = (inst.top_eigenvectors * mix).normalized();
    inst.y_clean = inst.F * inst.beta_star;

    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index(0));
    std::shuffle(idx.begin(), idx.end(), rng);
    inst.corruption_support.assign(idx.begin(), idx.begin() + spec.k);
    std::sort(inst.corruption_support.begin(), inst.corruption_support.end());
    const double mag = spec.corruption_scale * inst.y_clean.cwiseAbs().maxCoeff();
    inst.corruption = VectorXd::Zero(n);
    std::bernoulli_distribution sign(0.5);
    for (Index i : inst.corruption_support) inst.corruption(i) = sign(rng) ? mag : -mag;

    inst.noise = VectorXd::Zero(n);
    if (spec.noise_sigma > 0.0)
        for (Index i = 0; i < n; ++i) inst.noise(i) = spec.noise_sigma * gauss(rng);
    inst.problem.y = inst.y_clean + inst.corruption + inst.noise;
    return inst;
}

double theorem_lambda(const SynthInstance &inst) {
    return 1e-8 * inst.F.trace() / static_cast<double>(inst.F.rows());
}

RecoveryResult recovery_experiment(const SynthSpec &spec, const RecoveryOptions &opts) {
    const SynthInstance inst = generate(spec);
    RobustConfig<double> cfg;
    cfg.alpha = static_cast<double>(spec.k) / static_cast<double>(spec.n_points);
    cfg.eta = opts.eta;
    cfg.lambda = opts.lambda.value_or(theorem_lambda(inst));
    cfg.max_iters = opts.max_iters;
    cfg.tol = opts.tol;
    if (cfg.alpha > 0.5) cfg.alpha = 0.5;  // the loop itself rejects budgets past breakdown

    RecoveryResult res;
    const SprSolver<double> solver(inst.problem, KernelSpec<double>(KernelFamily::Gaussian, spec.h), cfg.lambda);
    const auto fit = fit_respire(solver, inst.problem.y, cfg, RobustObserver<double>([&](int, const SemiParamModel<double> &m) {
        res.errors.push_back((m.o() - inst.beta_star).norm());
    }));
    const VectorXd &o = fit.model.o();
    res.iterations = fit.iterations;
    res.final_error = (o - inst.beta_star).norm();
    res.noise_norm = inst.noise.norm();
    res.threshold = opts.eps_target + 7.0 * res.noise_norm;
    res.recovered = res.final_error < res.threshold;

    res.geometric_decay = true;
    for (std::size_t t = 2; t + 1 < res.errors.size(); ++t) {
        if (res.errors[t] < opts.eps_target) break;
        if (res.errors[t + 1] > opts.decay_ratio * res.errors[t]) {
            res.geometric_decay = false;
            break;
        }
    }

    res.prediction_rel_error = (inst.F * o - inst.y_clean).norm() / std::max(inst.y_clean.norm(), 1e-300);
    const double bnorm = inst.corruption.norm();
    res.corruption_rel_error = bnorm > 0.0 ? (fit.corruption - inst.corruption).norm() / bnorm : fit.corruption.norm();
    std::vector<Index> found;
    for (Index i = 0; i < fit.corruption.size(); ++i)
        if (fit.corruption(i) != 0.0) found.push_back(i);
    res.support_recovered = found == inst.corruption_support;
    const MatrixXd &v = inst.top_eigenvectors;
    res.projected_coef_error = (v * (v.transpose() * o) - inst.beta_star).norm();
    return res;
}

namespace {

MatrixXd random_psd(std::mt19937_64 &rng, Index dim) {
    std::uniform_int_distribution<Index> rank_dist(1, dim);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Index rank = rank_dist(rng);
    MatrixXd u(dim, rank);
    for (Index j = 0; j < rank; ++j)
        for (Index i = 0; i < dim; ++i) u(i, j) = gauss(rng);
    return u * u.transpose();
}

double min_eigenvalue(const MatrixXd &a) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    return eig.eigenvalues()(0);
}

void record(LemmaReport &rep, int trial, double margin) {
    if (margin < 0.0) {
        if (rep.violations++ == 0) rep.first_failing_trial = trial;
    }
    rep.worst_margin = std::min(rep.worst_margin, margin);
}

}  // namespace

LemmaReport check_psd_closure(int trials, Index dim, std::uint64_t seed) {
    if (dim < 1) throw Error("dimension must be positive");
    LemmaReport rep;
    rep.trials = trials;
    const double floor = -1e-8 * static_cast<double>(dim);
    for (int t = 0; t < trials; ++t) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(t));
        const MatrixXd a = random_psd(rng, dim), b = random_psd(rng, dim);
        const double m = std::min(min_eigenvalue(a + b), min_eigenvalue(a.cwiseProduct(b)));
        record(rep, t, m - floor);
    }
    return rep;
}

VectorXd eigenvalues_descending(const MatrixXd &a) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericError("eigenvalue computation failed");
    return eig.eigenvalues().reverse();
}

double uniform_top_eigenvalue(const MatrixXd &a, Index k) {
    const Index n = a.rows();
    if (k < 1 || k > n) throw Error("principal submatrix size must lie in [1, n]");
    std::vector<bool> mask(static_cast<std::size_t>(n), false);
    std::fill(mask.begin(), mask.begin() + k, true);
    double best = -std::numeric_limits<double>::infinity();
    MatrixXd sub(k, k);
    std::vector<Index> rows;
    do {
        rows.clear();
        for (Index i = 0; i < n; ++i)
            if (mask[static_cast<std::size_t>(i)]) rows.push_back(i);
        for (Index p = 0; p < k; ++p)
            for (Index q = 0; q < k; ++q) sub(p, q) = a(rows[static_cast<std::size_t>(p)], rows[static_cast<std::size_t>(q)]);
        best = std::max(best, eigenvalues_descending(sub)(0));
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return best;
}

LemmaReport check_eigen_bounds(int trials, Index dim, Index k, Index s, std::uint64_t seed) {
    if (dim < 1 || dim > 8) throw Error("eigen-bound checks enumerate submatrices; dim must lie in [1, 8]");
    if (k < 1 || k > std::min<Index>(3, dim) || s < 1 || s > std::min<Index>(3, dim))
        throw Error("k and s must lie in [1, min(3, dim)]");
    constexpr double slack = 1e-9;
    LemmaReport rep;
    rep.trials = trials;
    for (int t = 0; t < trials; ++t) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(t));
        const MatrixXd a = random_psd(rng, dim), b = random_psd(rng, dim);
        std::uniform_real_distribution<double> diag(0.1, 3.0);
        VectorXd dv(dim);
        for (Index i = 0; i < dim; ++i) dv(i) = diag(rng);
        const MatrixXd d = dv.asDiagonal();
        const MatrixXd dad = d * a * d;

        const auto ls = [s](const MatrixXd &m) { return eigenvalues_descending(m)(s - 1); };
        const double d_min = dv.minCoeff();
        const double unif_d = uniform_top_eigenvalue(d, k);

        const double scale = 1.0 + a.norm() + b.norm();
        double margin = std::numeric_limits<double>::infinity();
        margin = std::min(margin, ls(a + b) - std::max(ls(a), ls(b)) + slack * scale);
        margin = std::min(margin, uniform_top_eigenvalue(a, k) + uniform_top_eigenvalue(b, k) -
                                      uniform_top_eigenvalue(a + b, k) + slack * scale);
        margin = std::min(margin, ls(dad) - ls(a) * d_min * d_min + slack * scale * 9.0);
        margin = std::min(margin, uniform_top_eigenvalue(a, k) * unif_d * unif_d - uniform_top_eigenvalue(dad, k) +
                                      slack * scale * 9.0);
        record(rep, t, margin);
    }
    return rep;
}

CalibrationData generate_calibration(const CalibrationSpec &spec) {
    if (spec.n < 2) throw Error("calibration generator needs n >= 2");
    if (!(spec.outlier_fraction >= 0.0 && spec.outlier_fraction <= 0.5)) throw Error("outlier fraction must lie in [0, 0.5]");
    auto rng = make_rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double two_pi = 2.0 * std::numbers::pi;
    const Index n = spec.n;

    CalibrationData out;
    AlignedDataset &ds = out.data;
    ds.id = spec.id;
    ds.x1.resize(n), ds.x2.resize(n), ds.temp.resize(n), ds.y.resize(n);
    out.clean_y.resize(n);
    double drift = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        ds.t.push_back(spec.start + std::chrono::minutes{15 * i});
        const double temp = 22.0 + 7.0 * std::sin(two_pi * t / 96.0 - std::numbers::pi / 2) +
                            2.0 * std::sin(two_pi * t / 960.0) + 0.5 * gauss(rng);
        drift = 0.95 * drift + 0.1 * gauss(rng);
        const double co = std::max(0.05, 1.2 + 0.5 * std::sin(two_pi * t / 96.0 + 1.0) + drift);
        const double op2 = 260.0 + 1.5 * (temp - 20.0) + gauss(rng);
        const double kappa = 1.0 + 0.03 * (temp - 20.0);
        const double sens = 90.0 * (1.0 + 0.01 * (temp - 20.0));
        const double op1 = 280.0 + kappa * (op2 - 260.0) + sens * co + gauss(rng);
        ds.temp(i) = temp;
        ds.x1(i) = op1;
        ds.x2(i) = op2;
        out.clean_y(i) = co;
        ds.y(i) = co + 0.02 * gauss(rng);
    }

    const Index n_train = std::clamp<Index>(static_cast<Index>(std::ceil(spec.train_frac * static_cast<double>(n) - 1e-12)), 1, n);
    const auto n_out = static_cast<Index>(std::floor(spec.outlier_fraction * static_cast<double>(n_train) + 1e-9));
    if (n_out > 0) {
        std::vector<Index> idx(static_cast<std::size_t>(n_train));
        std::iota(idx.begin(), idx.end(), Index(0));
        std::shuffle(idx.begin(), idx.end(), rng);
        out.outliers.assign(idx.begin(), idx.begin() + n_out);
        std::sort(out.outliers.begin(), out.outliers.end());
        const double sd = std::sqrt((ds.y.array() - ds.y.mean()).square().mean());
        for (Index i : out.outliers) ds.y(i) += spec.outlier_magnitude * sd;
    }
    ds = ds.normalized_with(fit_norm_params(ds.temp));
    return out;
}

AlignedDataset shift_scale_target(const AlignedDataset &ds, double shift, double scale) {
    AlignedDataset out = ds;
    out.y = (scale * ds.y.array() + shift).matrix();
    return out;
}

AlignedDataset swap_operating_potentials(const AlignedDataset &ds) {
    AlignedDataset out = ds;
    out.x1.swap(out.x2);
    return out;
}

AlignedDataset shuffle_targets(const AlignedDataset &ds, std::uint64_t seed) {
    auto rng = make_rng(seed, 0x5u);
    std::vector<Index> idx(static_cast<std::size_t>(ds.size()));
    std::iota(idx.begin(), idx.end(), Index(0));
    std::shuffle(idx.begin(), idx.end(), rng);
    AlignedDataset out = ds;
    for (Index i = 0; i < ds.size(); ++i) out.y(i) = ds.y(idx[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace respire
