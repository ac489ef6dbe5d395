#include "tgemb/checkpoint.hpp"

#include <fstream>

#include "tgemb/errors.hpp"
#include "tgemb/io.hpp"

namespace tgemb {

namespace {

constexpr uint32_t kMagic = 0x504b4354;  // "TCKP"
constexpr uint32_t kVersion = 1;

void write_matrix(std::ostream& os, const std::string& name, const Eigen::MatrixXd& m) {
  io::write_string(os, name);
  io::write_u64(os, static_cast<uint64_t>(m.rows()));
  io::write_u64(os, static_cast<uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) io::write_f64(os, m(r, c));
}

}  // namespace

void save_tensors(const std::string& path, const NamedTensors& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path);
  io::write_u32(os, kMagic);
  io::write_u32(os, kVersion);
  io::write_u64(os, tensors.size());
  for (const auto& [name, m] : tensors) write_matrix(os, name, m);
  if (!os) throw DataError("short write: " + path);
}

NamedTensors load_tensors(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  if (io::read_u32(is, "magic") != kMagic) throw DataError("not a checkpoint file: " + path);
  const uint32_t version = io::read_u32(is, "version");
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  const uint64_t count = io::read_u64(is, "tensor count");
  NamedTensors out;
  for (uint64_t i = 0; i < count; ++i) {
    const std::string name = io::read_string(is, "tensor name");
    const auto rows = static_cast<Eigen::Index>(io::read_u64(is, "rows"));
    const auto cols = static_cast<Eigen::Index>(io::read_u64(is, "cols"));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = io::read_f64(is, "values");
    out.emplace(name, std::move(m));
  }
  return out;
}

void save_parameters(const std::string& path, const ad::ParameterSet& params,
                     const NamedTensors& extra) {
  NamedTensors all = extra;
  for (const auto* p : params) {
    if (!all.emplace(p->name, p->value).second)
      throw DataError("duplicate tensor name in checkpoint: " + p->name);
  }
  save_tensors(path, all);
}

NamedTensors load_parameters(const std::string& path, ad::ParameterSet& params) {
  NamedTensors all = load_tensors(path);
  for (auto* p : params) {
    auto it = all.find(p->name);
    if (it == all.end()) throw DataError("checkpoint is missing tensor: " + p->name);
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols())
      throw DataError("checkpoint tensor '" + p->name + "' has shape " +
                      ad::shape_str(it->second) + ", expected " + ad::shape_str(p->value));
    p->value = it->second;
    all.erase(it);
  }
  return all;  // whatever was not a model parameter (memory state, config)
}

}  // namespace tgemb
