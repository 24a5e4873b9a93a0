#include "respire/config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace respire;

namespace {

RunConfig parse(const std::string &text) {
    std::istringstream in(text);
    return parse_config(in);
}

std::size_t error_line(const std::string &text) {
    try {
        (void)parse(text);
    } catch (const ParseError &e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("header only gives the defaults") {
        const auto cfg = parse("respire-config v1\n");
        CHECK(cfg == RunConfig{});
        CHECK(cfg.settings.grid.alpha == std::vector<double>{0.0, 0.05, 0.1, 0.15, 0.2});
        CHECK(cfg.settings.scoring.holdout_delta == 0.05);
        CHECK(cfg.methods.size() == 3);
    }

    TEST_CASE("keys, comments and blank lines") {
        const auto cfg = parse(
            "# run\n"
            "respire-config v1\n"
            "\n"
            "dataset.T-W = data/tw.csv\n"
            "dataset.M-S=data/ms.csv\n"
            "methods = RESPIRE,KRR\n"
            "grid.alpha = 0,0.05\n"
            "grid.families = gaussian,matern-3/2\n"
            "adapter = off   \n"
            "compression.levels = 1,0.1\n"
            "seed = 17\n"
            "folds = 4\n"
            "robust.max_iters = 20\n"
            "cv.holdout_delta = 0\n");
        CHECK(cfg.datasets.at("T-W") == "data/tw.csv");
        CHECK(cfg.datasets.at("M-S") == "data/ms.csv");
        CHECK(cfg.methods == std::vector<Method>{Method::Respire, Method::KRR});
        CHECK(cfg.settings.grid.alpha == std::vector<double>{0.0, 0.05});
        CHECK(cfg.settings.grid.families == std::vector<KernelFamily>{KernelFamily::Gaussian, KernelFamily::Matern32});
        CHECK_FALSE(cfg.adapter);
        CHECK(cfg.compression_levels == std::vector<double>{1.0, 0.1});
        CHECK(cfg.seed == 17);
        CHECK(cfg.settings.folds == 4);
        CHECK(cfg.settings.limits.max_iters == 20);
        CHECK(cfg.settings.scoring.holdout_delta == 0.0);
    }

    TEST_CASE("write then parse is the identity") {
        RunConfig cfg;
        cfg.datasets = {{"T-W", "/data/tw.csv"}, {"L-S", "rel/ls.csv"}};
        cfg.methods = {Method::RR};
        cfg.settings.grid.lambda = {0.1, 1.0 / 3.0};
        cfg.settings.baselines.krr_q_ls = {0.2};
        cfg.settings.limits.tol = 1e-9;
        cfg.adapter = false;
        cfg.output_dir = "out dir";
        cfg.seed = 123456789012345ULL;
        cfg.train_frac = 0.75;
        cfg.min_points = 12;
        std::ostringstream out;
        write_config(out, cfg);
        const auto back = parse(out.str());
        CHECK(back == cfg);
        std::ostringstream again;
        write_config(again, back);
        CHECK(again.str() == out.str());
    }

    TEST_CASE("errors carry line numbers") {
        CHECK(error_line("") == 1);
        CHECK(error_line("version 1\n") == 1);
        CHECK(error_line("respire-config v1\nbogus = 1\n") == 2);
        CHECK(error_line("respire-config v1\n\nseed 5\n") == 3);
        CHECK(error_line("respire-config v1\nmethods = RESPIRE,DT\n") == 2);
        CHECK(error_line("respire-config v1\ngrid.alpha = 0,abc\n") == 2);
        CHECK(error_line("respire-config v1\ndataset.A = a.csv\ndataset.A = b.csv\n") == 3);
        CHECK(error_line("respire-config v1\nadapter = maybe\n") == 2);
        CHECK_THROWS_AS((void)parse("respire-config v1\ntrain_frac = 1\n"), Error);
        CHECK_THROWS_AS((void)parse("respire-config v1\ngrid.eta = 0\n"), Error);
        CHECK_THROWS_AS((void)parse("respire-config v1\ncompression.levels = 0\n"), Error);
    }

    TEST_CASE("config files resolve dataset paths and require them to exist") {
        const auto dir = std::filesystem::temp_directory_path() / "respire_config_test";
        std::filesystem::create_directories(dir / "data");
        std::ofstream(dir / "data" / "tw.csv") << "timestamp,op1_mv,op2_mv,temp_c,co_ref\n";
        std::ofstream(dir / "run.cfg") << "respire-config v1\ndataset.T-W = data/tw.csv\n";
        const auto cfg = read_config_file((dir / "run.cfg").string());
        CHECK(cfg.datasets.at("T-W") == (dir / "data" / "tw.csv").string());
        std::ofstream(dir / "bad.cfg") << "respire-config v1\ndataset.T-W = data/missing.csv\n";
        CHECK_THROWS_AS((void)read_config_file((dir / "bad.cfg").string()), Error);
        CHECK_THROWS_AS((void)read_config_file((dir / "none.cfg").string()), Error);
        std::filesystem::remove_all(dir);
    }
}
