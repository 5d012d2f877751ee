#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace grasp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Plane = Eigen::ArrayXXd;          // height x width raster plane
using BoolPlane = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Bad flags, unknown keys, impossible requests from the caller. Exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Missing or malformed input data. Exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite objectives, degenerate geometry, failed numerics. Exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The seven raster channels, in flattening order.
enum Channel : int {
  kDepth = 0,
  kY = 1,
  kU = 2,
  kV = 3,
  kNormalX = 4,
  kNormalY = 5,
  kNormalZ = 6,
};
inline constexpr int kNumChannels = 7;

inline const char* channel_name(int c) {
  static const char* names[kNumChannels] = {"depth", "Y", "U", "V", "nX", "nY", "nZ"};
  return (c >= 0 && c < kNumChannels) ? names[c] : "?";
}

/// Runs fn(i) for i in [0, n). Work is split into fixed-size chunks so each
/// index is computed exactly once regardless of the thread count; callers
/// that write result[i] get outputs identical to a serial loop.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t chunk = 256) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw <= 1 || n <= chunk) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<std::thread> workers;
  std::size_t n_workers = std::min<std::size_t>(hw, n_chunks);
  std::atomic<std::size_t> next{0};
  workers.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) {
    workers.emplace_back([&]() {
      for (;;) {
        std::size_t ci = next.fetch_add(1);
        if (ci >= n_chunks) return;
        std::size_t lo = ci * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      }
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace grasp
