#pragma once

// Synthetic instances for the recovery harness, lemma property checks, and a physically
// motivated calibration-data generator for pipeline experiments.

#include "respire/dataio.hpp"
#include "respire/robust.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace respire {

/// Random stream for (seed, trial).
[[nodiscard]] std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t trial = 0);

struct SynthSpec {
    Index n_points = 400;
    Index s = 5;
    Index k = 20;
    double r = 1.0;
    double R = 2.0;
    double h = 0.5;
    double noise_sigma = 0.0;
    double corruption_scale = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthInstance {
    FitProblem<double> problem;
    VectorXd beta_star;
    std::vector<Index> corruption_support;  // ascending
    VectorXd y_clean;                       // F beta*
    VectorXd corruption;                    // b
    VectorXd noise;                         // e*
    MatrixXd F;
    MatrixXd top_eigenvectors;              // N x s, spans beta*
};

[[nodiscard]] SynthInstance generate(const SynthSpec &spec);

/// 1e-8 * trace(F) / N.
[[nodiscard]] double theorem_lambda(const SynthInstance &inst);

struct RecoveryResult {
    std::vector<double> errors;  // ||beta_hat_t - beta*|| per iteration, beta_hat_t = o_t
    double final_error = 0.0;
    double threshold = 0.0;      // eps_target + 7 ||e*||
    double noise_norm = 0.0;
    bool recovered = false;
    bool geometric_decay = false;
    int iterations = 0;
    // Diagnostics that do not depend on coefficient identifiability.
    double prediction_rel_error = 0.0;  // ||F o - y*|| / ||y*||
    double corruption_rel_error = 0.0;  // ||c - b|| / ||b|| (0 when b = 0)
    bool support_recovered = false;
    double projected_coef_error = 0.0;  // ||V_s V_s^T o - beta*||
};

struct RecoveryOptions {
    std::optional<double> lambda;  // default theorem_lambda
    double eta = 1.0;
    int max_iters = 50;
    double tol = 1e-12;
    double eps_target = 1e-4;
    double decay_ratio = 0.9;
};

[[nodiscard]] RecoveryResult recovery_experiment(const SynthSpec &spec, const RecoveryOptions &opts = {});

struct LemmaReport {
    int trials = 0;
    int violations = 0;
    int first_failing_trial = -1;
    double worst_margin = 0.0;  // most negative slack observed (0 if none)
    [[nodiscard]] bool passed() const { return violations == 0; }
};

/// Random PSD pairs; checks min eig of A + B and A .* B against -1e-8 * dim.
[[nodiscard]] LemmaReport check_psd_closure(int trials, Index dim, std::uint64_t seed);

/// Descending eigenvalues (lambda_1 >= ... >= lambda_n).
[[nodiscard]] VectorXd eigenvalues_descending(const MatrixXd &a);
/// Largest eigenvalue over all k x k principal submatrices.
[[nodiscard]] double uniform_top_eigenvalue(const MatrixXd &a, Index k);

/// The four eigenvalue inequalities for random PSD A, B and positive diagonal D, at 1e-9 slack.
[[nodiscard]] LemmaReport check_eigen_bounds(int trials, Index dim, Index k, Index s, std::uint64_t seed);

/// Synthetic electrochemical CO sensor on a 15-minute cadence. The response follows
/// op1 = 280 + kappa(T) (op2 - 260) + S(T) co, so co is exactly semi-parametric in (op1, op2, T).
struct CalibrationSpec {
    Index n = 1000;
    std::uint64_t seed = 0;
    double outlier_fraction = 0.0;  // of the train portion
    double outlier_magnitude = 8.0;  // in units of std(y)
    double train_frac = 0.8;
    std::string id = "SYN";
    Timestamp start = Timestamp{std::chrono::seconds{1577836800}};  // 2020-01-01T00:00:00Z
};

struct CalibrationData {
    AlignedDataset data;
    VectorXd clean_y;
    std::vector<Index> outliers;  // ascending
};

[[nodiscard]] CalibrationData generate_calibration(const CalibrationSpec &spec);

/// y <- scale * y + shift.
[[nodiscard]] AlignedDataset shift_scale_target(const AlignedDataset &ds, double shift, double scale);
/// Exchanges the op1 and op2 columns.
[[nodiscard]] AlignedDataset swap_operating_potentials(const AlignedDataset &ds);
/// Random permutation of y (auxiliary and inputs untouched).
[[nodiscard]] AlignedDataset shuffle_targets(const AlignedDataset &ds, std::uint64_t seed);

}  // namespace respire
