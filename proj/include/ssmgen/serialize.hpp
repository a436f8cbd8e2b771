#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "ssmgen/ssm.hpp"

namespace ssmgen {

// Layer document: {m, d, repr: "diag"|"full", a_log_re[], a_im[], b_re[], b_im[],
// c_re[][], c_im[][], d_skip[]?, delta[]}. For repr "full" the a_log_re/a_im
// arrays carry the raw real/imaginary parts of A row-major (length m*m); the
// exponential parameterization only applies to the diagonal representation.
nlohmann::json params_to_json(const SSMLayerParams& params);
SSMLayerParams params_from_json(const nlohmann::json& j);

// A model is a list of layers: {"layers": [...]}. A bare layer document is
// also accepted when loading.
nlohmann::json model_to_json(const std::vector<SSMLayerParams>& model);
std::vector<SSMLayerParams> model_from_json(const nlohmann::json& j);

void save_model(const std::vector<SSMLayerParams>& model, const std::string& path);
std::vector<SSMLayerParams> load_model(const std::string& path);

std::uint64_t model_hash(const std::vector<SSMLayerParams>& model);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace ssmgen
