#pragma once

#include "respire/evaluation.hpp"
#include "respire/tuning.hpp"

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace respire {

/// y ~ a * prediction + b.
struct Adapter {
    double a = 1.0;
    double b = 0.0;
};

[[nodiscard]] Adapter fit_adapter(const VectorXd &predictions, const VectorXd &truth);
[[nodiscard]] VectorXd apply_adapter(const Adapter &ad, const VectorXd &predictions);

/// source_op ~ A * target_op + d, row-wise.
struct SensorMap {
    Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
    Eigen::Vector2d d = Eigen::Vector2d::Zero();
};

[[nodiscard]] SensorMap fit_sensor_map(const MatrixXd &target_ops, const MatrixXd &source_ops);
[[nodiscard]] MatrixXd apply_sensor_map(const SensorMap &map, const MatrixXd &ops);

enum class ScenarioKind { SS, SX, XS, XX };

[[nodiscard]] std::string_view to_string(ScenarioKind k);
/// Ids look like "SITE-SEASON"; an id without '-' is a site with an unspecified (shared) season.
[[nodiscard]] ScenarioKind scenario_kind(std::string_view source_id, std::string_view target_id);

struct ScenarioCell {
    std::string method;
    std::string source;
    std::string target;
    ScenarioKind kind = ScenarioKind::SS;
    bool adapter = false;
    double r2 = 0.0;
    double robust_r2_05 = 0.0;
    Index n_test = 0;
    double train_r2_before = 0.0;  // target train split, unadapted
    double train_r2_after = 0.0;   // target train split, adapted (equals before when adapter is off)
    std::string error;             // non-empty when the cell failed
};

struct ScenarioOptions {
    double train_frac = 0.8;
    MethodSettings settings;
    bool with_adapter = true;
    bool without_adapter = true;
};

/// Every ordered (source, target) pair, every method: train on the source train split, test on the
/// target test split, optionally with an adapter fit on the target train split.
[[nodiscard]] std::vector<ScenarioCell> run_scenario_matrix(const std::map<std::string, AlignedDataset> &datasets,
                                                            const std::vector<Method> &methods,
                                                            const ScenarioOptions &opts);

void write_scenario_csv(std::ostream &out, const std::vector<ScenarioCell> &cells);

/// scores[method + adapter flag][source->target] from successful cells.
[[nodiscard]] ScoreTable scenario_scores(const std::vector<ScenarioCell> &cells);

using SensorScenarioResult = std::array<double, 5>;  // S1..S5

/// `model` was trained on the source train split. Both datasets are split temporally with
/// `train_frac`; the sensor map is fit on timestamps shared by the two train splits.
[[nodiscard]] SensorScenarioResult run_sensor_scenarios(const AlignedDataset &source, const AlignedDataset &target,
                                                        const Predictor &model, double train_frac = 0.8);

}  // namespace respire
