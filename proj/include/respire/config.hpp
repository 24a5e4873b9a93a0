#pragma once

// Run configuration in a flat, versioned key = value format:
//
//   respire-config v1
//   # comment
//   dataset.T-W = data/tw.csv
//   methods = RESPIRE,RR,KRR
//   grid.alpha = 0,0.05,0.1,0.15,0.2
//   cv.holdout_delta = 0.05
//   ...
//
// write_config emits every key, so parse(write(c)) == c.

#include "respire/tuning.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace respire {

struct RunConfig {
    std::map<std::string, std::string> datasets;  // id -> aligned CSV path
    std::vector<Method> methods{Method::Respire, Method::RR, Method::KRR};
    MethodSettings settings;
    bool adapter = true;
    std::vector<double> compression_levels{1.0, 0.5, 0.25, 0.1, 0.05};
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    double train_frac = 0.8;
    Index min_points = 30;

    friend bool operator==(const RunConfig &, const RunConfig &);
};

[[nodiscard]] RunConfig parse_config(std::istream &in);
/// Also resolves relative dataset paths against the config file directory and checks they exist.
[[nodiscard]] RunConfig read_config_file(const std::string &path);
void write_config(std::ostream &out, const RunConfig &cfg);

}  // namespace respire
