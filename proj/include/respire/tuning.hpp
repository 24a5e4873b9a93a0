#pragma once

#include "respire/methods.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace respire {

struct HyperGrid {
    std::vector<double> alpha{0.0, 0.05, 0.1, 0.15, 0.2};
    std::vector<double> q_ls{0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<double> eta{0.1, 0.4, 0.7, 1.0};
    std::vector<double> lambda{0.1, 0.5, 1.0, 5.0, 10.0};
    std::vector<KernelFamily> families{KernelFamily::Gaussian};

    [[nodiscard]] std::size_t size() const;
    void validate() const;
    /// Every cell in search order: family, then alpha, q_ls, eta, lambda, each ascending as listed.
    [[nodiscard]] std::vector<RespireHyper> cells() const;
};

using FoldSplit = std::pair<std::vector<Index>, std::vector<Index>>;  // (fit, holdout)

/// k contiguous blocks; the first N mod k blocks get one extra point.
[[nodiscard]] std::vector<FoldSplit> kfold_splits(Index n, int k);
[[nodiscard]] std::vector<FoldSplit> kfold_splits(const AlignedDataset &train, int k);

/// Fit portion of a fold with its auxiliary normalization refit on that portion.
[[nodiscard]] AlignedDataset fold_fit_portion(const AlignedDataset &train, const FoldSplit &fold);

struct CvRow {
    RespireHyper hyper;
    std::vector<double> fold_r2;  // NaN where the fold failed
    double mean_r2 = 0.0;         // NaN if any fold failed
};

struct TuneResult {
    RespireHyper best;
    double best_score = 0.0;
    std::vector<CvRow> table;  // in search order
};

struct RobustLimits {
    int max_iters = 50;
    double tol = 1e-6;
};

/// Holdout score used by cross-validation: robust R^2 at `holdout_delta` (0 gives plain R^2).
/// Train folds may carry gross outliers; scoring them with plain R^2 rewards models that chase them.
struct CvScoring {
    double holdout_delta = 0.05;
};

/// Exhaustive k-fold search. Only the train split is accepted; the first best cell in search order wins.
[[nodiscard]] TuneResult grid_search(const AlignedDataset &train, const HyperGrid &grid, int k = 3,
                                     const RobustLimits &limits = {}, const CvScoring &scoring = {});

void write_cv_table(std::ostream &out, const TuneResult &result);

struct BaselineGrid {
    std::vector<double> krr_lambda{0.1, 1.0, 10.0};
    std::vector<double> krr_q_ls{0.1, 0.25, 0.5, 0.75, 0.9};
    std::vector<double> rr_lambda{0.1, 1.0, 10.0, 50.0, 100.0};
};

struct ScalarChoice {
    double lambda = 1.0;
    double q_ls = 0.0;  // unused for RR
    double score = 0.0;
};

[[nodiscard]] ScalarChoice tune_ridge(const AlignedDataset &train, const std::vector<double> &lambdas, int k = 3,
                                      const CvScoring &scoring = {});
[[nodiscard]] ScalarChoice tune_kernel_ridge(const AlignedDataset &train, const std::vector<double> &q_ls,
                                             const std::vector<double> &lambdas, int k = 3,
                                             const CvScoring &scoring = {});

enum class Method { Respire, RR, KRR };

[[nodiscard]] std::string_view method_name(Method m);
[[nodiscard]] std::optional<Method> parse_method(std::string_view s);

struct MethodSettings {
    HyperGrid grid;
    BaselineGrid baselines;
    int folds = 3;
    RobustLimits limits;
    CvScoring scoring;
};

struct TrainedMethod {
    Method method = Method::Respire;
    Predictor predict;
    std::string hyper_summary;
    std::optional<RobustFit<double>> respire;  // set for Method::Respire
};

/// Tunes on `train` by k-fold CV and refits the winner on all of `train`.
[[nodiscard]] TrainedMethod train_method(Method m, const AlignedDataset &train, const MethodSettings &settings);

[[nodiscard]] std::string describe(const RespireHyper &h);

}  // namespace respire
