#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "grasp/common.hpp"

namespace grasp {

/// Binary R x N membership matrix S assigning every input coordinate to
/// exactly one modality group. Stored compactly as a mode index per
/// coordinate; the per-mode coordinate lists are precomputed for the group
/// regularizers.
class ModalityMask {
 public:
  ModalityMask() = default;

  ModalityMask(int num_modes, std::vector<std::uint8_t> mode_of)
      : num_modes_(num_modes), mode_of_(std::move(mode_of)) {
    if (num_modes_ <= 0) throw DataError("ModalityMask: need at least one mode");
    indices_.resize(num_modes_);
    for (std::size_t i = 0; i < mode_of_.size(); ++i) {
      if (mode_of_[i] >= num_modes_)
        throw DataError("ModalityMask: coordinate assigned to unknown mode");
      indices_[mode_of_[i]].push_back(static_cast<int>(i));
    }
  }

  /// Layout used by patch flattening: `num_modes` contiguous blocks of
  /// `block` coordinates each.
  static ModalityMask contiguous(int num_modes, int block) {
    std::vector<std::uint8_t> mode_of;
    mode_of.reserve(static_cast<std::size_t>(num_modes) * block);
    for (int r = 0; r < num_modes; ++r)
      for (int i = 0; i < block; ++i) mode_of.push_back(static_cast<std::uint8_t>(r));
    return ModalityMask(num_modes, std::move(mode_of));
  }

  /// All coordinates in a single group; used for weight matrices whose input
  /// space has no modality structure (e.g. a second hidden layer).
  static ModalityMask single_group(int n) {
    return ModalityMask(1, std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0));
  }

  int num_modes() const { return num_modes_; }
  int size() const { return static_cast<int>(mode_of_.size()); }
  int mode_of(int i) const { return mode_of_[static_cast<std::size_t>(i)]; }
  bool s(int r, int i) const { return mode_of_[static_cast<std::size_t>(i)] == r; }
  const std::vector<int>& mode_indices(int r) const { return indices_[static_cast<std::size_t>(r)]; }
  int mode_count(int r) const { return static_cast<int>(indices_[static_cast<std::size_t>(r)].size()); }
  const std::vector<std::uint8_t>& assignments() const { return mode_of_; }

  bool operator==(const ModalityMask& o) const {
    return num_modes_ == o.num_modes_ && mode_of_ == o.mode_of_;
  }

 private:
  int num_modes_ = 0;
  std::vector<std::uint8_t> mode_of_;
  std::vector<std::vector<int>> indices_;
};

}  // namespace grasp
