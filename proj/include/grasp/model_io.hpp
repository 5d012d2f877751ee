#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "grasp/network.hpp"

namespace grasp {

/// Versioned binary model container. All integers and reals are explicit
/// little-endian; weight matrices are written row-major. Layout:
///   magic "GDNM" | u32 version | u32 flatten_order | u32 N,K1,K2,R
///   | u32 patch_side | f64 scale_cap | modality bitset (R*N bits, row-major)
///   | R x (mean, std) f64 | W1 | b1 | W2 | b2 | W3 | b3
inline constexpr std::uint32_t kModelVersion = 1;
inline constexpr char kModelMagic[4] = {'G', 'D', 'N', 'M'};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f64(std::ostream& os, double d) {
  std::uint64_t v = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw DataError(std::string("model file truncated reading ") + what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is, const char* what) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8))
    throw DataError(std::string("model file truncated reading ") + what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

inline void put_matrix_rowmajor(std::ostream& os, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(os, m(r, c));
}

inline Mat get_matrix_rowmajor(std::istream& is, Eigen::Index rows, Eigen::Index cols,
                               const char* what) {
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get_f64(is, what);
  return m;
}

}  // namespace detail

inline void save_model(const NetworkParams& net, const std::filesystem::path& path) {
  net.check_consistent();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("save_model: cannot open " + path.string());

  os.write(kModelMagic, 4);
  detail::put_u32(os, kModelVersion);
  detail::put_u32(os, net.flatten_order);
  const std::uint32_t N = static_cast<std::uint32_t>(net.input_size());
  const std::uint32_t K1 = static_cast<std::uint32_t>(net.k1());
  const std::uint32_t K2 = static_cast<std::uint32_t>(net.k2());
  const std::uint32_t R = static_cast<std::uint32_t>(net.modality.num_modes());
  detail::put_u32(os, N);
  detail::put_u32(os, K1);
  detail::put_u32(os, K2);
  detail::put_u32(os, R);
  detail::put_u32(os, static_cast<std::uint32_t>(net.patch_side));
  detail::put_f64(os, net.scale_cap);

  // modality matrix as a packed row-major bitset
  const std::size_t nbits = static_cast<std::size_t>(R) * N;
  std::vector<unsigned char> bits((nbits + 7) / 8, 0);
  for (std::uint32_t r = 0; r < R; ++r)
    for (std::uint32_t i = 0; i < N; ++i)
      if (net.modality.s(static_cast<int>(r), static_cast<int>(i))) {
        std::size_t bit = static_cast<std::size_t>(r) * N + i;
        bits[bit / 8] |= static_cast<unsigned char>(1u << (bit % 8));
      }
  os.write(reinterpret_cast<const char*>(bits.data()), static_cast<std::streamsize>(bits.size()));

  for (std::uint32_t r = 0; r < R; ++r) {
    detail::put_f64(os, net.norm.mean[r]);
    detail::put_f64(os, net.norm.stddev[r]);
  }

  detail::put_matrix_rowmajor(os, net.W1);
  for (Eigen::Index i = 0; i < net.b1.size(); ++i) detail::put_f64(os, net.b1[i]);
  detail::put_matrix_rowmajor(os, net.W2);
  for (Eigen::Index i = 0; i < net.b2.size(); ++i) detail::put_f64(os, net.b2[i]);
  for (Eigen::Index i = 0; i < net.W3.size(); ++i) detail::put_f64(os, net.W3[i]);
  detail::put_f64(os, net.b3);

  if (!os) throw DataError("save_model: write failed for " + path.string());
}

inline NetworkParams load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("load_model: cannot open " + path.string());

  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0)
    throw DataError("load_model: " + path.string() + " is not a model file (bad magic)");
  std::uint32_t version = detail::get_u32(is, "version");
  if (version != kModelVersion)
    throw DataError("load_model: unsupported model version " + std::to_string(version) +
                    " (expected " + std::to_string(kModelVersion) + ")");

  NetworkParams net;
  net.flatten_order = detail::get_u32(is, "flatten order");
  const std::uint32_t N = detail::get_u32(is, "input size");
  const std::uint32_t K1 = detail::get_u32(is, "K1");
  const std::uint32_t K2 = detail::get_u32(is, "K2");
  const std::uint32_t R = detail::get_u32(is, "mode count");
  net.patch_side = static_cast<int>(detail::get_u32(is, "patch side"));
  net.scale_cap = detail::get_f64(is, "scale cap");
  if (N == 0 || K1 == 0 || K2 == 0 || R == 0)
    throw DataError("load_model: zero dimension in header");

  const std::size_t nbits = static_cast<std::size_t>(R) * N;
  std::vector<unsigned char> bits((nbits + 7) / 8, 0);
  if (!is.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(bits.size())))
    throw DataError("model file truncated reading modality bitset");
  std::vector<std::uint8_t> mode_of(N, 0xff);
  for (std::uint32_t r = 0; r < R; ++r)
    for (std::uint32_t i = 0; i < N; ++i) {
      std::size_t bit = static_cast<std::size_t>(r) * N + i;
      if (bits[bit / 8] & (1u << (bit % 8))) {
        if (mode_of[i] != 0xff)
          throw DataError("load_model: coordinate assigned to two modes");
        mode_of[i] = static_cast<std::uint8_t>(r);
      }
    }
  for (std::uint32_t i = 0; i < N; ++i)
    if (mode_of[i] == 0xff) throw DataError("load_model: coordinate assigned to no mode");
  net.modality = ModalityMask(static_cast<int>(R), std::move(mode_of));

  net.norm.mean = Vec(R);
  net.norm.stddev = Vec(R);
  for (std::uint32_t r = 0; r < R; ++r) {
    net.norm.mean[r] = detail::get_f64(is, "norm mean");
    net.norm.stddev[r] = detail::get_f64(is, "norm std");
  }

  net.W1 = detail::get_matrix_rowmajor(is, N, K1, "W1");
  net.b1 = Vec(K1);
  for (std::uint32_t i = 0; i < K1; ++i) net.b1[i] = detail::get_f64(is, "b1");
  net.W2 = detail::get_matrix_rowmajor(is, K1, K2, "W2");
  net.b2 = Vec(K2);
  for (std::uint32_t i = 0; i < K2; ++i) net.b2[i] = detail::get_f64(is, "b2");
  net.W3 = Vec(K2);
  for (std::uint32_t i = 0; i < K2; ++i) net.W3[i] = detail::get_f64(is, "W3");
  net.b3 = detail::get_f64(is, "b3");

  char extra;
  if (is.read(&extra, 1))
    throw DataError("load_model: trailing bytes after model payload in " + path.string());

  net.check_consistent();
  return net;
}

/// Load and assert compatibility with an expected input pipeline.
inline NetworkParams load_model_expecting(const std::filesystem::path& path, int expected_input) {
  NetworkParams net = load_model(path);
  if (net.input_size() != expected_input)
    throw DataError("load_model: " + path.string() + " has input size " +
                    std::to_string(net.input_size()) + " but the pipeline expects " +
                    std::to_string(expected_input));
  return net;
}

}  // namespace grasp
