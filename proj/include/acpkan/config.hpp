#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "acpkan/train.hpp"

namespace acpkan {

/// `key = value` lines; `#` starts a comment. Later keys override earlier
/// ones. Throws std::invalid_argument on malformed lines.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

/// Applies keys named after TrainConfig fields (problem, model, epochs, seed,
/// lr, weight_decay, rga, eta, beta_w, eps, lambda_r, lambda_d, use_log,
/// gra_stride, metrics_stride, d_model, d_hidden, layers, degree, mlp_sizes,
/// grid, boundary, eval_grid, wave_coefficient, parallel, shard_size).
/// Unknown keys and unparsable values throw std::invalid_argument.
void apply_config(TrainConfig& config, const std::map<std::string, std::string>& values);

}  // namespace acpkan
