#include "cli.hpp"

#include "respire/config.hpp"
#include "respire/dataio.hpp"
#include "respire/evaluation.hpp"
#include "respire/methods.hpp"
#include "respire/model_io.hpp"
#include "respire/synthlab.hpp"
#include "respire/transfer.hpp"
#include "respire/tuning.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace respire::cli {

namespace {

/// A checked property did not hold (exit code 1).
class AssertionFailure : public Error {
public:
    using Error::Error;
};

std::ofstream open_out(const std::string &path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    return out;
}

RunConfig load_config(const std::string &path) { return path.empty() ? RunConfig{} : read_config_file(path); }

std::string dataset_id_from_path(const std::string &path) {
    auto slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    if (auto dot = base.rfind('.'); dot != std::string::npos && dot > 0) base.resize(dot);
    return base;
}

AlignedDataset load_aligned(const std::string &path) { return read_aligned_csv_file(path, dataset_id_from_path(path)); }

void require_size(const AlignedDataset &ds, const RunConfig &cfg) {
    if (ds.size() < cfg.min_points)
        throw Error("dataset '" + ds.id + "' has " + std::to_string(ds.size()) + " aligned points; at least " +
                    std::to_string(cfg.min_points) + " are required (min_points)");
}

// ---------------------------------------------------------------------------------------------

struct IngestArgs {
    std::string sensor, reference, out;
    int window_minutes = 15;
    double min_valid = 0.5;
};

int cmd_ingest(const IngestArgs &a, std::ostream &out) {
    const auto sensor = read_sensor_csv_file(a.sensor);
    const auto ref = read_reference_csv_file(a.reference);
    ResampleOptions opts;
    opts.window = std::chrono::minutes{a.window_minutes};
    opts.min_valid_fraction = a.min_valid;
    const auto sensor_rs = resample_average(sensor, opts);
    const auto ref_rs = resample_average(ref, opts);
    const auto aligned = align(sensor_rs, ref_rs);
    write_aligned_csv_file(a.out, aligned);
    out << "sensor records:     " << sensor.records.size() << '\n'
        << "reference records:  " << ref.records.size() << '\n'
        << "sensor windows:     " << sensor_rs.records.size() << '\n'
        << "reference windows:  " << ref_rs.records.size() << '\n'
        << "aligned records:    " << aligned.size() << '\n'
        << "wrote " << a.out << '\n';
    return kOk;
}

struct FitArgs {
    std::string data, config, out, cv_table;
};

int cmd_fit(const FitArgs &a, std::ostream &out) {
    const RunConfig cfg = load_config(a.config);
    const AlignedDataset ds = load_aligned(a.data);
    require_size(ds, cfg);
    const auto [train, test] = temporal_split(ds, cfg.train_frac);
    const auto tuned = grid_search(train, cfg.settings.grid, cfg.settings.folds, cfg.settings.limits, cfg.settings.scoring);
    const auto fit = train_respire(train, tuned.best, cfg.settings.limits.max_iters, cfg.settings.limits.tol);
    {
        auto f = open_out(a.out);
        write_model(f, fit);
    }
    if (!a.cv_table.empty()) {
        auto f = open_out(a.cv_table);
        write_cv_table(f, tuned);
    }
    out << "chosen:     " << describe(tuned.best) << '\n'
        << "length:     " << format_double(fit.model.spec.length_scale) << '\n'
        << "cv score:   " << format_double(tuned.best_score) << '\n'
        << "iterations: " << fit.iterations << (fit.converged ? " (converged)" : " (max_iters)") << '\n'
        << "train r2:   " << format_double(r2(train.y, predict(fit.model, train.ops(), train.temp))) << '\n'
        << "test r2:    " << format_double(r2(test.y, predict(fit.model, test.ops(), test.temp))) << '\n'
        << "wrote " << a.out << '\n';
    return kOk;
}

struct EvaluateArgs {
    std::string model, data, config, out;
    bool all = false;
};

int cmd_evaluate(const EvaluateArgs &a, std::ostream &out) {
    const RunConfig cfg = load_config(a.config);
    const auto model = read_model_file(a.model).model;
    const AlignedDataset ds = load_aligned(a.data);
    const AlignedDataset eval_set = a.all ? ds : temporal_split(ds, cfg.train_frac).second;
    const auto report = evaluate("RESPIRE", ds.id, eval_set.y, predict(model, eval_set.ops(), eval_set.temp));
    write_summary(out, report);
    if (!a.out.empty()) {
        auto f = open_out(a.out);
        write_robust_curve_csv(f, report);
        out << "wrote " << a.out << '\n';
    }
    return kOk;
}

struct TuneArgs {
    std::string data, config, out;
};

int cmd_tune(const TuneArgs &a, std::ostream &out) {
    const RunConfig cfg = load_config(a.config);
    const AlignedDataset ds = load_aligned(a.data);
    require_size(ds, cfg);
    const auto train = temporal_split(ds, cfg.train_frac).first;
    const auto tuned = grid_search(train, cfg.settings.grid, cfg.settings.folds, cfg.settings.limits, cfg.settings.scoring);
    auto f = open_out(a.out);
    write_cv_table(f, tuned);
    out << "cells:  " << tuned.table.size() << '\n'
        << "best:   " << describe(tuned.best) << '\n'
        << "score:  " << format_double(tuned.best_score) << '\n'
        << "wrote " << a.out << '\n';
    return kOk;
}

struct TransferArgs {
    std::string config, out;
};

int cmd_transfer_matrix(const TransferArgs &a, std::ostream &out) {
    const RunConfig cfg = read_config_file(a.config);
    if (cfg.datasets.empty()) throw Error("config lists no datasets (dataset.<id> = <path>)");
    std::map<std::string, AlignedDataset> datasets;
    for (const auto &[id, path] : cfg.datasets) datasets.emplace(id, read_aligned_csv_file(path, id));
    ScenarioOptions opts;
    opts.train_frac = cfg.train_frac;
    opts.settings = cfg.settings;
    opts.with_adapter = true;
    opts.without_adapter = true;
    if (!cfg.adapter) opts.with_adapter = false;
    const auto cells = run_scenario_matrix(datasets, cfg.methods, opts);
    {
        auto f = open_out(a.out);
        write_scenario_csv(f, cells);
    }
    std::size_t failed = 0;
    for (const auto &c : cells)
        if (!c.error.empty()) {
            ++failed;
            out << "cell failed: " << c.method << ' ' << c.source << "->" << c.target
                << (c.adapter ? " (adapter)" : "") << ": " << c.error << '\n';
        }
    out << "cells: " << cells.size() << " (" << failed << " failed)\n" << "wins (epsilon 0.01):\n";
    for (const auto &[method, wins] : win_counts(scenario_scores(cells), 0.01)) out << "  " << method << ": " << wins << '\n';
    out << "wrote " << a.out << '\n';
    if (!cells.empty() && failed == cells.size()) throw AssertionFailure("every scenario cell failed");
    return kOk;
}

struct SensorTransferArgs {
    std::string source, target, config, out;
};

int cmd_sensor_transfer(const SensorTransferArgs &a, std::ostream &out) {
    const RunConfig cfg = load_config(a.config);
    const AlignedDataset src = load_aligned(a.source);
    const AlignedDataset tgt = load_aligned(a.target);
    require_size(src, cfg);
    require_size(tgt, cfg);
    auto f = open_out(a.out);
    f << "direction,source,target,S1,S2,S3,S4,S5\n";
    const std::pair<const AlignedDataset *, const AlignedDataset *> directions[] = {{&src, &tgt}, {&tgt, &src}};
    for (const auto &[s, t] : directions) {
        const auto trained = train_method(Method::Respire, temporal_split(*s, cfg.train_frac).first, cfg.settings);
        const auto res = run_sensor_scenarios(*s, *t, trained.predict, cfg.train_frac);
        const std::string dir = s->id + "->" + t->id;
        f << dir << ',' << s->id << ',' << t->id;
        out << dir << " (" << trained.hyper_summary << ")\n";
        for (std::size_t i = 0; i < res.size(); ++i) {
            f << ',' << format_double(res[i]);
            out << "  S" << i + 1 << ": " << format_double(res[i]) << '\n';
        }
        f << '\n';
    }
    out << "wrote " << a.out << '\n';
    return kOk;
}

struct CompressArgs {
    std::string model, data, config, out;
    std::vector<double> levels;
};

int cmd_compress(const CompressArgs &a, std::ostream &out) {
    const RunConfig cfg = load_config(a.config);
    const auto file = read_model_file(a.model);
    const auto &model = file.model;
    const AlignedDataset ds = load_aligned(a.data);
    const auto [train, test] = temporal_split(ds, cfg.train_frac);
    FitProblem<double> problem = make_problem(train, model.input_scaling);
    if (problem.size() != model.size() || problem.z != model.z_train)
        throw Error("the model was not trained on the train split of '" + a.data + "'");
    if (file.corruption) problem.y -= file.corruption->eta * file.corruption->values;  // targets the model was fit on
    const auto levels = a.levels.empty() ? cfg.compression_levels : a.levels;
    auto f = open_out(a.out);
    f << "level,n_keep,r2\n";
    for (double level : levels) {
        if (!(level > 0.0 && level <= 1.0)) throw Error("compression levels must lie in (0, 1]");
        const auto n_keep = std::max<Index>(1, static_cast<Index>(std::ceil(level * static_cast<double>(model.size()) - 1e-9)));
        const auto compressed = compress(model, problem, n_keep);
        const double score = r2(test.y, predict(compressed, test.ops(), test.temp));
        f << format_double(level) << ',' << n_keep << ',' << format_double(score) << '\n';
        out << "level " << format_double(level) << ": n_keep " << n_keep << ", test r2 " << format_double(score) << '\n';
    }
    out << "wrote " << a.out << '\n';
    return kOk;
}

struct DiagnoseArgs {
    std::string model, out;
    double tau = 3.0;
    int points = 200;
};

int cmd_diagnose(const DiagnoseArgs &a, std::ostream &out) {
    const auto model = read_model_file(a.model).model;
    const auto curves = weight_curves(model, training_z_grid(model, a.points));
    const auto flag = overfit_flag(curves, a.tau);
    auto f = open_out(a.out);
    f << "z,w1,w2,b\n";
    for (Index i = 0; i < curves.z.size(); ++i)
        f << format_double(curves.z(i)) << ',' << format_double(curves.weights(i, 0)) << ','
          << format_double(curves.weights(i, 1)) << ',' << format_double(curves.bias(i)) << '\n';
    out << "smoothness w1: " << format_double(flag.w1_index) << '\n'
        << "smoothness w2: " << format_double(flag.w2_index) << '\n'
        << "smoothness b:  " << format_double(flag.bias_index) << '\n'
        << "tau:           " << format_double(a.tau) << '\n'
        << "overfit flag:  " << (flag.flagged ? "yes" : "no") << '\n'
        << "wrote " << a.out << '\n';
    return kOk;
}

struct SynthVerifyArgs {
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int seeds = 20;
    SynthSpec spec;
    std::string metric = "coefficient";
    int psd_trials = 500, bound_trials = 200;
    bool skip_breakdown = false;
};

int cmd_synth_verify(const SynthVerifyArgs &a, std::ostream &out) {
    if (a.metric != "coefficient" && a.metric != "prediction")
        throw Error("--recovery-metric must be 'coefficient' or 'prediction'");
    std::ostringstream report;
    report << "check,trial,seed,passed,value,threshold\n";
    std::ofstream traces = open_out(a.out_dir + "/recovery_traces.csv");
    traces << "seed,iteration,error\n";
    bool all_passed = true;
    std::string first_failure;
    auto note = [&](const std::string &check, int trial, std::uint64_t seed, bool passed, double value,
                    double threshold) {
        report << check << ',' << trial << ',' << seed << ',' << (passed ? "yes" : "no") << ','
               << format_double(value) << ',' << format_double(threshold) << '\n';
        if (!passed && all_passed) {
            all_passed = false;
            first_failure = check + " (seed " + std::to_string(seed) + ", trial " + std::to_string(trial) + ")";
        }
    };

    const auto psd = check_psd_closure(a.psd_trials, 8, a.seed);
    note("psd_closure", psd.first_failing_trial, a.seed, psd.passed(), psd.violations, 0);
    out << "psd closure:   " << psd.trials << " trials, " << psd.violations << " violations\n";
    int bound_violations = 0;
    for (Index k = 1; k <= 3; ++k)
        for (Index s = 1; s <= 3; ++s) {
            const auto eb = check_eigen_bounds(a.bound_trials, 8, k, s, a.seed);
            bound_violations += eb.violations;
            note("eigen_bounds_k" + std::to_string(k) + "_s" + std::to_string(s), eb.first_failing_trial, a.seed,
                 eb.passed(), eb.violations, 0);
        }
    out << "eigen bounds:  " << a.bound_trials << " trials x 9 (k, s) pairs, " << bound_violations << " violations\n";

    int recovered = 0, decays = 0;
    for (int i = 0; i < a.seeds; ++i) {
        SynthSpec spec = a.spec;
        spec.seed = a.seed + static_cast<std::uint64_t>(i);
        const auto r = recovery_experiment(spec);
        for (std::size_t t = 0; t < r.errors.size(); ++t)
            traces << spec.seed << ',' << t + 1 << ',' << format_double(r.errors[t]) << '\n';
        const bool ok = a.metric == "coefficient" ? r.recovered : r.prediction_rel_error < 1e-6;
        recovered += ok;
        decays += r.geometric_decay;
        report << "recovery_diagnostics," << i << ',' << spec.seed << ",info,"
               << format_double(r.prediction_rel_error) << ',' << format_double(r.corruption_rel_error) << '\n';
        if (a.metric == "coefficient")
            note("recovery_coefficient", i, spec.seed, ok, r.final_error, r.threshold);
        else
            note("recovery_prediction", i, spec.seed, ok, r.prediction_rel_error, 1e-6);
        out << "seed " << spec.seed << ": iterations " << r.iterations << ", coef error "
            << format_double(r.final_error) << ", prediction rel error " << format_double(r.prediction_rel_error)
            << ", corruption rel error " << format_double(r.corruption_rel_error) << ", support "
            << (r.support_recovered ? "exact" : "differs") << ", projected coef error "
            << format_double(r.projected_coef_error) << '\n';
    }
    out << "recovery (" << a.metric << "): " << recovered << '/' << a.seeds << " seeds\n"
        << "geometric decay: " << decays << '/' << a.seeds << " seeds (reported)\n";

    if (!a.skip_breakdown) {
        SynthSpec spec = a.spec;
        spec.seed = a.seed;
        spec.k = spec.n_points / 2;
        const auto r = recovery_experiment(spec);
        report << "breakdown_demo,0," << spec.seed << ",info," << format_double(r.final_error) << ','
               << format_double(r.threshold) << '\n';
        out << "breakdown demo (k = N/2): coef error " << format_double(r.final_error) << ", recovered "
            << (r.recovered ? "yes" : "no") << " (not asserted)\n";
    }

    {
        auto f = open_out(a.out_dir + "/synth_report.csv");
        f << report.str();
    }
    out << "wrote " << a.out_dir << "/synth_report.csv and " << a.out_dir << "/recovery_traces.csv\n";
    if (!all_passed) throw AssertionFailure("failed: " + first_failure);
    out << "all asserted properties passed\n";
    return kOk;
}

struct SynthDataArgs {
    std::string out;
    CalibrationSpec spec;
    double shift = 0.0, scale = 1.0;
    bool swap_ops = false;
};

int cmd_synth_data(const SynthDataArgs &a, std::ostream &out) {
    auto data = generate_calibration(a.spec).data;
    if (a.shift != 0.0 || a.scale != 1.0) data = shift_scale_target(data, a.shift, a.scale);
    if (a.swap_ops) data = swap_operating_potentials(data);
    write_aligned_csv_file(a.out, data);
    out << "records: " << data.size() << '\n' << "wrote " << a.out << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Robust semi-parametric calibration of low-cost CO sensors"};
    app.require_subcommand(1);
    std::function<int()> action;

    IngestArgs ingest;
    auto *c_ingest = app.add_subcommand("ingest", "resample, align and write a sensor/reference pair");
    c_ingest->add_option("--sensor", ingest.sensor, "raw sensor CSV")->required();
    c_ingest->add_option("--reference", ingest.reference, "reference CSV")->required();
    c_ingest->add_option("--out", ingest.out, "aligned CSV to write")->required();
    c_ingest->add_option("--window-minutes", ingest.window_minutes, "averaging window")->capture_default_str();
    c_ingest->add_option("--min-valid", ingest.min_valid, "minimum valid fraction per window")->capture_default_str();
    c_ingest->callback([&] { action = [&] { return cmd_ingest(ingest, out); }; });

    FitArgs fit;
    auto *c_fit = app.add_subcommand("fit", "tune on the train split and write a model");
    c_fit->add_option("--data", fit.data, "aligned CSV")->required();
    c_fit->add_option("--config", fit.config, "run config");
    c_fit->add_option("--out", fit.out, "model file to write")->required();
    c_fit->add_option("--cv-table", fit.cv_table, "optional CV table CSV");
    c_fit->callback([&] { action = [&] { return cmd_fit(fit, out); }; });

    EvaluateArgs ev;
    auto *c_eval = app.add_subcommand("evaluate", "R^2 and robust R^2 of a model on a dataset");
    c_eval->add_option("--model", ev.model, "model file")->required();
    c_eval->add_option("--data", ev.data, "aligned CSV")->required();
    c_eval->add_option("--config", ev.config, "run config (train_frac)");
    c_eval->add_option("--out", ev.out, "robust curve CSV (delta,r2)");
    c_eval->add_flag("--all", ev.all, "evaluate on every record instead of the test split");
    c_eval->callback([&] { action = [&] { return cmd_evaluate(ev, out); }; });

    TuneArgs tune;
    auto *c_tune = app.add_subcommand("tune", "write the full cross-validation table");
    c_tune->add_option("--data", tune.data, "aligned CSV")->required();
    c_tune->add_option("--config", tune.config, "run config");
    c_tune->add_option("--out", tune.out, "CV table CSV")->required();
    c_tune->callback([&] { action = [&] { return cmd_tune(tune, out); }; });

    TransferArgs tm;
    auto *c_tm = app.add_subcommand("transfer-matrix", "every ordered dataset pair, every method");
    c_tm->add_option("--config", tm.config, "run config listing datasets")->required();
    c_tm->add_option("--out", tm.out, "results CSV")->required();
    c_tm->callback([&] { action = [&] { return cmd_transfer_matrix(tm, out); }; });

    SensorTransferArgs st;
    auto *c_st = app.add_subcommand("sensor-transfer", "S1..S5 scenarios in both directions");
    c_st->add_option("--source", st.source, "source sensor aligned CSV")->required();
    c_st->add_option("--target", st.target, "target sensor aligned CSV")->required();
    c_st->add_option("--config", st.config, "run config");
    c_st->add_option("--out", st.out, "scenario CSV")->required();
    c_st->callback([&] { action = [&] { return cmd_sensor_transfer(st, out); }; });

    CompressArgs cp;
    auto *c_cp = app.add_subcommand("compress", "test R^2 across retention levels");
    c_cp->add_option("--model", cp.model, "model file")->required();
    c_cp->add_option("--data", cp.data, "aligned CSV the model was fit on")->required();
    c_cp->add_option("--config", cp.config, "run config");
    c_cp->add_option("--levels", cp.levels, "retention fractions")->delimiter(',');
    c_cp->add_option("--out", cp.out, "compression CSV")->required();
    c_cp->callback([&] { action = [&] { return cmd_compress(cp, out); }; });

    DiagnoseArgs dg;
    auto *c_dg = app.add_subcommand("diagnose", "weight curves and the overfitting flag");
    c_dg->add_option("--model", dg.model, "model file")->required();
    c_dg->add_option("--out", dg.out, "curve CSV (z,w1,w2,b)")->required();
    c_dg->add_option("--tau", dg.tau, "smoothness threshold")->capture_default_str();
    c_dg->add_option("--points", dg.points, "grid size")->capture_default_str();
    c_dg->callback([&] { action = [&] { return cmd_diagnose(dg, out); }; });

    SynthVerifyArgs sv;
    auto *c_sv = app.add_subcommand("synth-verify", "lemma checks and recovery experiments");
    c_sv->add_option("--out-dir", sv.out_dir, "directory for report CSVs")->capture_default_str();
    c_sv->add_option("--seed", sv.seed, "base seed")->capture_default_str();
    c_sv->add_option("--seeds", sv.seeds, "recovery seeds")->capture_default_str();
    c_sv->add_option("--n", sv.spec.n_points, "N")->capture_default_str();
    c_sv->add_option("--s", sv.spec.s, "eigenvector span")->capture_default_str();
    c_sv->add_option("--k", sv.spec.k, "corruption sparsity")->capture_default_str();
    c_sv->add_option("--bandwidth", sv.spec.h, "Gaussian bandwidth h")->capture_default_str();
    c_sv->add_option("--noise", sv.spec.noise_sigma, "benign noise sigma")->capture_default_str();
    c_sv->add_option("--corruption-scale", sv.spec.corruption_scale, "corruption magnitude")->capture_default_str();
    c_sv->add_option("--psd-trials", sv.psd_trials)->capture_default_str();
    c_sv->add_option("--bound-trials", sv.bound_trials)->capture_default_str();
    c_sv->add_option("--recovery-metric", sv.metric, "coefficient | prediction")->capture_default_str();
    c_sv->add_flag("--skip-breakdown", sv.skip_breakdown, "skip the k = N/2 demonstration");
    c_sv->callback([&] { action = [&] { return cmd_synth_verify(sv, out); }; });

    SynthDataArgs sd;
    auto *c_sd = app.add_subcommand("synth-data", "write a synthetic aligned calibration CSV");
    c_sd->add_option("--out", sd.out, "aligned CSV")->required();
    c_sd->add_option("--n", sd.spec.n, "records")->capture_default_str();
    c_sd->add_option("--seed", sd.spec.seed)->capture_default_str();
    c_sd->add_option("--outliers", sd.spec.outlier_fraction, "outlier fraction of the train part")->capture_default_str();
    c_sd->add_option("--shift", sd.shift, "add to y")->capture_default_str();
    c_sd->add_option("--scale", sd.scale, "multiply y")->capture_default_str();
    c_sd->add_flag("--swap-ops", sd.swap_ops, "exchange op1 and op2");
    c_sd->callback([&] { action = [&] { return cmd_synth_data(sd, out); }; });

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        if (!rev.empty()) rev.pop_back();  // program name
        app.parse(rev);
    } catch (const CLI::ParseError &e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsageOrIo;
    }
    try {
        return action();
    } catch (const AssertionFailure &e) {
        err << "assertion failed: " << e.what() << '\n';
        return kAssertionFailed;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kUsageOrIo;
    }
}

}  // namespace respire::cli
