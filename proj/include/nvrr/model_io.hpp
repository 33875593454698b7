#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "nvrr/binio.hpp"
#include "nvrr/shallow_net.hpp"

namespace nvrr {

inline constexpr const char kModelMagic[] = "NVRRNN1";
inline constexpr int kModelFormatVersion = 1;

// Versioned binary weight file ("NVRRNN1\0", dims, norm scale, then w1, b1,
// w2, b2 as little-endian doubles, row-major). Hyperparameters and provenance
// go to a JSON sidecar at <path>.json; the binary alone suffices to predict.
inline void save_model(const std::string& path, const ShallowNet& net,
                       const nlohmann::json& sidecar_extra = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write model file: " + path);
  binio::write_magic(out, std::string_view(kModelMagic, 8));
  binio::write_le<uint32_t>(out, kModelFormatVersion);
  binio::write_le<uint32_t>(out, static_cast<uint32_t>(net.input_dim()));
  binio::write_le<uint32_t>(out, static_cast<uint32_t>(net.hidden_dim()));
  binio::write_le<double>(out, net.norm_scale);
  auto write_mat = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) binio::write_le<double>(out, m(r, c));
  };
  write_mat(net.w1);
  write_mat(net.b1);
  write_mat(net.w2);
  write_mat(net.b2);
  if (!out) throw io_error("failed writing model file: " + path);

  nlohmann::json sidecar = sidecar_extra;
  sidecar["format_version"] = kModelFormatVersion;
  sidecar["input_dim"] = net.input_dim();
  sidecar["hidden_dim"] = net.hidden_dim();
  sidecar["norm_scale"] = net.norm_scale;
  std::ofstream side(path + ".json");
  if (!side) throw io_error("cannot write model sidecar: " + path + ".json");
  side << sidecar.dump(2) << "\n";
}

inline ShallowNet load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open model file: " + path);
  binio::expect_magic(in, std::string_view(kModelMagic, 8), "nvrr model");
  const uint32_t version = binio::read_le<uint32_t>(in);
  if (version != kModelFormatVersion) throw io_error("unsupported model version");
  const uint32_t input = binio::read_le<uint32_t>(in);
  const uint32_t hidden = binio::read_le<uint32_t>(in);
  ShallowNet net;
  net.norm_scale = binio::read_le<double>(in);
  auto read_mat = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = binio::read_le<double>(in);
    return m;
  };
  net.w1 = read_mat(hidden, input);
  net.b1 = read_mat(hidden, 1);
  net.w2 = read_mat(2, hidden);
  net.b2 = read_mat(2, 1);
  return net;
}

}  // namespace nvrr
