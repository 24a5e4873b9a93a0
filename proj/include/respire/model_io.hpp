#pragma once

// Flat text model files:
//
//   RESPIRE-MODEL v1
//   family <name>
//   length_scale <v>
//   lambda <v>
//   norm_params <z_min>,<z_max>
//   input_norm identity | <offset_1>,<scale_1>,<offset_2>,<scale_2>
//   N <n>
//   z_i,m_i,n_i,o_i          (n rows)
//   CORRUPTION eta=<v> count=<k>      (optional)
//   i,c_i                    (k rows, nonzero entries only)
//
// Numbers use the shortest decimal form that round-trips, so a written model reads back bit-exact.

#include "respire/robust.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace respire {

struct CorruptionSection {
    double eta = 1.0;
    VectorXd values;  // dense, length N
};

struct ModelFile {
    SemiParamModel<double> model;
    std::optional<CorruptionSection> corruption;
};

void write_model(std::ostream &out, const SemiParamModel<double> &model,
                 const std::optional<CorruptionSection> &corruption = std::nullopt);
void write_model(std::ostream &out, const RobustFit<double> &fit);
[[nodiscard]] ModelFile read_model(std::istream &in);

void write_model_file(const std::string &path, const SemiParamModel<double> &model,
                      const std::optional<CorruptionSection> &corruption = std::nullopt);
[[nodiscard]] ModelFile read_model_file(const std::string &path);

}  // namespace respire
