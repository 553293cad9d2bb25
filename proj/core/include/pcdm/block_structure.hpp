#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pcdm {

/// Partition of the N coordinates into n contiguous blocks. Block i occupies
/// coordinates [offset(i), offset(i+1)).
class BlockStructure {
 public:
  BlockStructure() = default;

  /// Every coordinate its own block.
  static BlockStructure unit(std::size_t num_coords);
  /// Throws pcdm::Error on an empty list or a zero-sized block.
  static BlockStructure from_sizes(std::vector<std::size_t> sizes);

  std::size_t num_blocks() const noexcept { return sizes_.size(); }
  std::size_t num_coords() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
  std::size_t size(std::size_t block) const { return sizes_[block]; }
  std::size_t offset(std::size_t block) const { return offsets_[block]; }
  std::size_t block_of(std::size_t coord) const { return owner_[coord]; }
  bool is_unit() const noexcept { return num_blocks() == num_coords(); }

  std::span<const std::size_t> sizes() const noexcept { return sizes_; }
  std::span<const std::size_t> offsets() const noexcept { return offsets_; }

  template <typename T>
  std::span<T> slice(std::span<T> v, std::size_t block) const {
    return v.subspan(offsets_[block], sizes_[block]);
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;  // n + 1 entries
  std::vector<std::size_t> owner_;    // coord -> block
};

}  // namespace pcdm
