#include "pcdm/block_structure.hpp"

#include <numeric>

#include "pcdm/error.hpp"

namespace pcdm {

BlockStructure BlockStructure::unit(std::size_t num_coords) {
  return from_sizes(std::vector<std::size_t>(num_coords, 1));
}

BlockStructure BlockStructure::from_sizes(std::vector<std::size_t> sizes) {
  if (sizes.empty()) throw Error("block structure needs at least one block");
  BlockStructure b;
  b.offsets_.reserve(sizes.size() + 1);
  b.offsets_.push_back(0);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw Error("block " + std::to_string(i) + " is empty");
    b.offsets_.push_back(b.offsets_.back() + sizes[i]);
  }
  b.owner_.resize(b.offsets_.back());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    std::fill(b.owner_.begin() + b.offsets_[i], b.owner_.begin() + b.offsets_[i + 1], i);
  }
  b.sizes_ = std::move(sizes);
  return b;
}

}  // namespace pcdm
