#include "respire/transfer.hpp"

#include <Eigen/QR>

#include <cmath>
#include <ostream>

namespace respire {

Adapter fit_adapter(const VectorXd &pred, const VectorXd &truth) {
    if (pred.size() != truth.size()) throw Error("fit_adapter: length mismatch");
    if (pred.size() < 2) throw Error("fit_adapter: need at least two points");
    const double mp = pred.mean(), mt = truth.mean();
    const VectorXd dp = pred.array() - mp;
    const VectorXd dt = truth.array() - mt;
    const double n = static_cast<double>(pred.size());
    const double var_p = dp.squaredNorm() / n, var_t = dt.squaredNorm() / n;
    if (var_p < 1e-12 * var_t + 1e-24) return {0.0, mt};
    const double a = dp.dot(dt) / dp.squaredNorm();
    return {a, mt - a * mp};
}

VectorXd apply_adapter(const Adapter &ad, const VectorXd &pred) { return (ad.a * pred.array() + ad.b).matrix(); }

SensorMap fit_sensor_map(const MatrixXd &target_ops, const MatrixXd &source_ops) {
    if (target_ops.cols() != 2 || source_ops.cols() != 2) throw Error("sensor maps take N x 2 operating potentials");
    if (target_ops.rows() != source_ops.rows()) throw Error("fit_sensor_map: row count mismatch");
    const Index n = target_ops.rows();
    if (n < 3) throw Error("fit_sensor_map: need at least three overlapping rows");
    MatrixXd design(n, 3);
    design.leftCols(2) = target_ops;
    design.col(2).setOnes();
    const Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(design);
    const MatrixXd coef = cod.solve(source_ops);  // 3 x 2
    SensorMap map;
    map.A = coef.topRows(2).transpose();
    map.d = coef.row(2).transpose();
    return map;
}

MatrixXd apply_sensor_map(const SensorMap &map, const MatrixXd &ops) {
    if (ops.cols() != 2) throw Error("apply_sensor_map: expected N x 2 input");
    return (ops * map.A.transpose()).rowwise() + map.d.transpose();
}

std::string_view to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::SS: return "SS";
        case ScenarioKind::SX: return "SX";
        case ScenarioKind::XS: return "XS";
        case ScenarioKind::XX: return "XX";
    }
    return "SS";
}

ScenarioKind scenario_kind(std::string_view source_id, std::string_view target_id) {
    auto parts = [](std::string_view id) {
        const auto dash = id.find('-');
        if (dash == std::string_view::npos) return std::pair{id, std::string_view{}};
        return std::pair{id.substr(0, dash), id.substr(dash + 1)};
    };
    const auto [s_site, s_season] = parts(source_id);
    const auto [t_site, t_season] = parts(target_id);
    const bool same_site = s_site == t_site, same_season = s_season == t_season;
    if (same_site) return same_season ? ScenarioKind::SS : ScenarioKind::SX;
    return same_season ? ScenarioKind::XS : ScenarioKind::XX;
}

std::vector<ScenarioCell> run_scenario_matrix(const std::map<std::string, AlignedDataset> &datasets,
                                              const std::vector<Method> &methods, const ScenarioOptions &opts) {
    if (datasets.empty()) throw Error("run_scenario_matrix needs at least one dataset");
    std::vector<bool> adapter_settings;
    if (opts.without_adapter) adapter_settings.push_back(false);
    if (opts.with_adapter) adapter_settings.push_back(true);

    std::map<std::string, std::pair<AlignedDataset, AlignedDataset>> splits;
    std::map<std::string, std::string> split_errors;
    for (const auto &[id, ds] : datasets) {
        try {
            splits.emplace(id, temporal_split(ds, opts.train_frac));
        } catch (const Error &e) {
            split_errors[id] = e.what();
        }
    }

    std::vector<ScenarioCell> cells;
    for (Method m : methods) {
        for (const auto &[src_id, src_ds] : datasets) {
            std::optional<TrainedMethod> trained;
            std::string train_error;
            if (auto it = splits.find(src_id); it != splits.end()) {
                try {
                    trained = train_method(m, it->second.first, opts.settings);
                } catch (const Error &e) {
                    train_error = e.what();
                }
            } else {
                train_error = split_errors[src_id];
            }
            for (const auto &[tgt_id, tgt_ds] : datasets) {
                for (bool with_adapter : adapter_settings) {
                    ScenarioCell cell;
                    cell.method = std::string(method_name(m));
                    cell.source = src_id;
                    cell.target = tgt_id;
                    cell.kind = scenario_kind(src_id, tgt_id);
                    cell.adapter = with_adapter;
                    try {
                        if (!trained) throw Error("training on " + src_id + " failed: " + train_error);
                        const auto it = splits.find(tgt_id);
                        if (it == splits.end()) throw Error("target " + tgt_id + ": " + split_errors[tgt_id]);
                        const auto &[tgt_train, tgt_test] = it->second;
                        const VectorXd train_pred = trained->predict(tgt_train);
                        VectorXd test_pred = trained->predict(tgt_test);
                        cell.train_r2_before = r2(tgt_train.y, train_pred);
                        cell.train_r2_after = cell.train_r2_before;
                        if (with_adapter) {
                            const Adapter ad = fit_adapter(train_pred, tgt_train.y);
                            test_pred = apply_adapter(ad, test_pred);
                            cell.train_r2_after = r2(tgt_train.y, apply_adapter(ad, train_pred));
                        }
                        cell.r2 = r2(tgt_test.y, test_pred);
                        cell.robust_r2_05 = robust_r2(tgt_test.y, test_pred, 0.05);
                        cell.n_test = tgt_test.size();
                    } catch (const Error &e) {
                        cell.error = e.what();
                        cell.r2 = cell.robust_r2_05 = std::nan("");
                    }
                    cells.push_back(std::move(cell));
                }
            }
        }
    }
    return cells;
}

void write_scenario_csv(std::ostream &out, const std::vector<ScenarioCell> &cells) {
    out << "method,source,target,kind,adapter,r2,robust_r2_at_0.05,n_test\n";
    for (const auto &c : cells)
        out << c.method << ',' << c.source << ',' << c.target << ',' << to_string(c.kind) << ','
            << (c.adapter ? "yes" : "no") << ',' << format_double(c.r2) << ',' << format_double(c.robust_r2_05) << ','
            << c.n_test << '\n';
}

ScoreTable scenario_scores(const std::vector<ScenarioCell> &cells) {
    ScoreTable t;
    for (const auto &c : cells) {
        if (!c.error.empty()) continue;
        t[c.method + (c.adapter ? "+adapter" : "")][c.source + "->" + c.target] = c.r2;
    }
    return t;
}

SensorScenarioResult run_sensor_scenarios(const AlignedDataset &source, const AlignedDataset &target,
                                          const Predictor &model, double train_frac) {
    const auto [src_train, src_test] = temporal_split(source, train_frac);
    const auto [tgt_train, tgt_test] = temporal_split(target, train_frac);

    std::vector<Index> src_rows, tgt_rows;
    for (std::size_t i = 0, j = 0; i < src_train.t.size() && j < tgt_train.t.size();) {
        if (src_train.t[i] < tgt_train.t[j]) {
            ++i;
        } else if (tgt_train.t[j] < src_train.t[i]) {
            ++j;
        } else {
            src_rows.push_back(static_cast<Index>(i++));
            tgt_rows.push_back(static_cast<Index>(j++));
        }
    }
    if (src_rows.size() < 3) throw Error("sensor transfer needs at least three shared train timestamps");
    const SensorMap map = fit_sensor_map(tgt_train.select(tgt_rows).ops(), src_train.select(src_rows).ops());

    SensorScenarioResult s{};
    const VectorXd src_test_pred = model(src_test);
    s[0] = r2(src_test.y, src_test_pred);
    s[1] = r2(src_test.y, apply_adapter(fit_adapter(model(src_train), src_train.y), src_test_pred));
    s[2] = r2(tgt_test.y, model(tgt_test));
    const VectorXd mapped_test = model(apply_sensor_map(map, tgt_test.ops()), tgt_test.temp);
    s[3] = r2(tgt_test.y, mapped_test);
    const VectorXd mapped_train = model(apply_sensor_map(map, tgt_train.ops()), tgt_train.temp);
    s[4] = r2(tgt_test.y, apply_adapter(fit_adapter(mapped_train, tgt_train.y), mapped_test));
    return s;
}

}  // namespace respire
