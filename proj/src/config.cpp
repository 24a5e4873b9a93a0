#include "respire/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

namespace respire {

namespace {

constexpr std::string_view kHeader = "respire-config v1";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(',', start);
        const auto item = trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (!item.empty()) out.push_back(item);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T number(std::string_view s, std::size_t line) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ParseError("bad number '" + std::string(s) + "'", line);
    return v;
}

std::vector<double> number_list(std::string_view s, std::size_t line) {
    std::vector<double> out;
    for (auto item : split_list(s)) out.push_back(number<double>(item, line));
    return out;
}

bool boolean(std::string_view s, std::size_t line) {
    if (s == "on" || s == "true" || s == "yes" || s == "1") return true;
    if (s == "off" || s == "false" || s == "no" || s == "0") return false;
    throw ParseError("expected on/off, got '" + std::string(s) + "'", line);
}

std::string join(const std::vector<double> &v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
    return out;
}

}  // namespace

bool operator==(const RunConfig &a, const RunConfig &b) {
    const auto &ga = a.settings.grid, &gb = b.settings.grid;
    const auto &ba = a.settings.baselines, &bb = b.settings.baselines;
    return a.datasets == b.datasets && a.methods == b.methods && ga.alpha == gb.alpha && ga.q_ls == gb.q_ls &&
           ga.eta == gb.eta && ga.lambda == gb.lambda && ga.families == gb.families && ba.krr_lambda == bb.krr_lambda &&
           ba.krr_q_ls == bb.krr_q_ls && ba.rr_lambda == bb.rr_lambda && a.settings.folds == b.settings.folds &&
           a.settings.limits.max_iters == b.settings.limits.max_iters &&
           a.settings.scoring.holdout_delta == b.settings.scoring.holdout_delta && a.settings.limits.tol == b.settings.limits.tol &&
           a.adapter == b.adapter && a.compression_levels == b.compression_levels && a.output_dir == b.output_dir &&
           a.seed == b.seed && a.train_frac == b.train_frac && a.min_points == b.min_points;
}

RunConfig parse_config(std::istream &in) {
    RunConfig cfg;
    std::string raw;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != kHeader) throw ParseError("config must start with '" + std::string(kHeader) + "'", lineno);
            header = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected key = value", lineno);
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        auto &g = cfg.settings.grid;
        auto &bl = cfg.settings.baselines;
        if (key.starts_with("dataset.")) {
            const std::string id(key.substr(8));
            if (id.empty()) throw ParseError("dataset id is empty", lineno);
            if (!cfg.datasets.emplace(id, std::string(value)).second)
                throw ParseError("duplicate dataset id '" + id + "'", lineno);
        } else if (key == "methods") {
            cfg.methods.clear();
            for (auto m : split_list(value)) {
                const auto parsed = parse_method(m);
                if (!parsed) throw ParseError("unknown method '" + std::string(m) + "'", lineno);
                cfg.methods.push_back(*parsed);
            }
        } else if (key == "grid.alpha") {
            g.alpha = number_list(value, lineno);
        } else if (key == "grid.q_ls") {
            g.q_ls = number_list(value, lineno);
        } else if (key == "grid.eta") {
            g.eta = number_list(value, lineno);
        } else if (key == "grid.lambda") {
            g.lambda = number_list(value, lineno);
        } else if (key == "grid.families") {
            g.families.clear();
            for (auto f : split_list(value)) {
                const auto parsed = parse_kernel_family(f);
                if (!parsed) throw ParseError("unknown kernel family '" + std::string(f) + "'", lineno);
                g.families.push_back(*parsed);
            }
        } else if (key == "krr.lambda") {
            bl.krr_lambda = number_list(value, lineno);
        } else if (key == "krr.q_ls") {
            bl.krr_q_ls = number_list(value, lineno);
        } else if (key == "rr.lambda") {
            bl.rr_lambda = number_list(value, lineno);
        } else if (key == "adapter") {
            cfg.adapter = boolean(value, lineno);
        } else if (key == "compression.levels") {
            cfg.compression_levels = number_list(value, lineno);
        } else if (key == "output_dir") {
            cfg.output_dir = std::string(value);
        } else if (key == "seed") {
            cfg.seed = number<std::uint64_t>(value, lineno);
        } else if (key == "folds") {
            cfg.settings.folds = number<int>(value, lineno);
        } else if (key == "train_frac") {
            cfg.train_frac = number<double>(value, lineno);
        } else if (key == "min_points") {
            cfg.min_points = number<Index>(value, lineno);
        } else if (key == "robust.max_iters") {
            cfg.settings.limits.max_iters = number<int>(value, lineno);
        } else if (key == "cv.holdout_delta") {
            cfg.settings.scoring.holdout_delta = number<double>(value, lineno);
        } else if (key == "robust.tol") {
            cfg.settings.limits.tol = number<double>(value, lineno);
        } else {
            throw ParseError("unknown key '" + std::string(key) + "'", lineno);
        }
    }
    if (!header) throw ParseError("empty config (missing version header)", std::max<std::size_t>(lineno, 1));
    cfg.settings.grid.validate();
    for (double l : cfg.compression_levels)
        if (!(l > 0.0 && l <= 1.0)) throw Error("compression levels must lie in (0, 1]");
    if (!(cfg.train_frac > 0.0 && cfg.train_frac < 1.0)) throw Error("train_frac must lie in (0, 1)");
    if (cfg.settings.folds < 2) throw Error("folds must be at least 2");
    const double hd = cfg.settings.scoring.holdout_delta;
    if (!(hd >= 0.0 && hd < 1.0)) throw Error("cv.holdout_delta must lie in [0, 1)");
    return cfg;
}

RunConfig read_config_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path + "'");
    RunConfig cfg = parse_config(in);
    // Relative dataset paths are taken relative to the config file.
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    for (auto &[id, file] : cfg.datasets) {
        std::filesystem::path p(file);
        if (p.is_relative()) p = base / p;
        if (!std::filesystem::exists(p)) throw Error("dataset '" + id + "': no such file '" + p.string() + "'");
        file = p.string();
    }
    return cfg;
}

void write_config(std::ostream &out, const RunConfig &cfg) {
    out << kHeader << '\n';
    for (const auto &[id, path] : cfg.datasets) out << "dataset." << id << " = " << path << '\n';
    out << "methods = ";
    for (std::size_t i = 0; i < cfg.methods.size(); ++i) out << (i ? "," : "") << method_name(cfg.methods[i]);
    out << '\n';
    const auto &g = cfg.settings.grid;
    out << "grid.alpha = " << join(g.alpha) << '\n'
        << "grid.q_ls = " << join(g.q_ls) << '\n'
        << "grid.eta = " << join(g.eta) << '\n'
        << "grid.lambda = " << join(g.lambda) << '\n'
        << "grid.families = ";
    for (std::size_t i = 0; i < g.families.size(); ++i) out << (i ? "," : "") << to_string(g.families[i]);
    out << '\n';
    const auto &bl = cfg.settings.baselines;
    out << "krr.lambda = " << join(bl.krr_lambda) << '\n'
        << "krr.q_ls = " << join(bl.krr_q_ls) << '\n'
        << "rr.lambda = " << join(bl.rr_lambda) << '\n'
        << "adapter = " << (cfg.adapter ? "on" : "off") << '\n'
        << "compression.levels = " << join(cfg.compression_levels) << '\n'
        << "output_dir = " << cfg.output_dir << '\n'
        << "seed = " << cfg.seed << '\n'
        << "folds = " << cfg.settings.folds << '\n'
        << "train_frac = " << format_double(cfg.train_frac) << '\n'
        << "min_points = " << cfg.min_points << '\n'
        << "robust.max_iters = " << cfg.settings.limits.max_iters << '\n'
        << "robust.tol = " << format_double(cfg.settings.limits.tol) << '\n'
        << "cv.holdout_delta = " << format_double(cfg.settings.scoring.holdout_delta) << '\n';
}

}  // namespace respire
