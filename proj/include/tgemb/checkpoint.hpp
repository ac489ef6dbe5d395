#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tgemb/autodiff.hpp"

// Named-tensor container.
//
// Byte layout (little-endian):
//   u32 magic "TCKP" (0x504b4354), u32 version (1), u64 tensor count,
//   then per tensor: u32 name length, name bytes, u64 rows, u64 cols,
//   rows*cols f64 values in row-major order.

namespace tgemb {

using NamedTensors = std::map<std::string, Eigen::MatrixXd>;

void save_tensors(const std::string& path, const NamedTensors& tensors);
NamedTensors load_tensors(const std::string& path);

// ParameterSet adapters: save writes every parameter's value under its name;
// load assigns by name and requires an exact match of names and shapes.
void save_parameters(const std::string& path, const ad::ParameterSet& params,
                     const NamedTensors& extra = {});
NamedTensors load_parameters(const std::string& path, ad::ParameterSet& params);

}  // namespace tgemb
